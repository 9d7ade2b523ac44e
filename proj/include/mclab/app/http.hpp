#pragma once

#include <httplib.h>

#include "mclab/app/service.hpp"

namespace mclab::app {

/// Installs the /api routes (and the static mount, if configured) on `server`.
/// NotFoundError maps to 404, ConflictError to 409, malformed input to 400.
void register_routes(httplib::Server& server, ExperimentService& service);

}  // namespace mclab::app
