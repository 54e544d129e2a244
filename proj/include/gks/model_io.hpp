#pragma once

#include "gks/statespace.hpp"

#include <string>
#include <string_view>

namespace gks {

/// JSON model schema. Keys follow the LtvModel field names:
///   N, n, m, p, A_seq, B_seq, C_seq, Q_seq, R_seq, [S_seq], mu, Pi, u_seq,
///   y_seq, [offset_seq], [observed]
/// A matrix is an array of rows, or a flat row-major array. A *_seq entry is
/// an array of N such matrices (or vectors). Throws Error{Config} on schema
/// problems.
LtvModel parse_model_json(std::string_view text);
LtvModel load_model_json(const std::string& path);
std::string model_to_json(const LtvModel& model);

}  // namespace gks
