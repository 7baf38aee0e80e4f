#pragma once

// Single include point for the vendored HTTP library so every translation
// unit sees identical configuration macros.

#ifndef CPPHTTPLIB_KEEPALIVE_MAX_COUNT
#define CPPHTTPLIB_KEEPALIVE_MAX_COUNT 1000000
#endif
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
// Request/response bodies here are one small JSON document each; Nagle plus
// delayed ACK would add ~40 ms per round trip.
#ifndef CPPHTTPLIB_TCP_NODELAY
#define CPPHTTPLIB_TCP_NODELAY true
#endif

#include "httplib.h"
