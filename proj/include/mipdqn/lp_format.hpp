#pragma once

#include <string>

#include "mipdqn/mip_model.hpp"

namespace mipdqn {

// Writes CPLEX-style LP text with deterministic variable ordering plus a
// sidecar name map at <path>.names.json. A nonzero objective constant is
// preserved in a comment line that import_lp reads back.
void export_lp(const MipModel& model, const std::string& path);

// Reads the dialect written by export_lp (sections: objective, Subject To,
// Bounds, Binary, End). Variable kinds are restored from the sidecar when
// present.
MipModel import_lp(const std::string& path);

}  // namespace mipdqn
