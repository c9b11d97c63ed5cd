#include "gaussflow/errors.hpp"

namespace gaussflow {

namespace {
std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "configuration invalid";
  for (const auto& s : v) {
    out += "; ";
    out += s;
  }
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace gaussflow
