#ifndef CESTGM_JSON_IO_HPP
#define CESTGM_JSON_IO_HPP

#include <string>

#include "cestgm/model.hpp"

namespace cestgm {

// Model-spec document: {"p", "d", "families", "theta", "phi"} with 1-indexed
// nodes and phi entries {"lag", "a", "b", "matrix"}. Family entries are
// lowercase kind strings, or {"kind": "binomial", "n_trials": n}.
// Malformed documents throw ParseError; duplicate (lag, a, b) entries throw
// ValidationError.
ModelSpec parse_model_spec(const std::string& json_text);
ModelSpec load_model_spec(const std::string& path);

// Canonical dump (sorted keys, round-trip floats); parse(dump(s)) == s.
std::string model_spec_to_json(const ModelSpec& spec);

}  // namespace cestgm

#endif
