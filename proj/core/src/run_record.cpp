#include "zopro/run_record.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace zopro {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json vector_json(const Vector& v) {
  return std::vector<double>(v.begin(), v.end());
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = j.at(k).get<double>();
  return v;
}

void RunRecord::write_csv(std::ostream& os) const {
  os << kCsvHeader << '\n';
  for (std::size_t k = 0; k < rounds(); ++k) {
    os << (k + 1) << ',' << format_double(avg_error[k]) << ','
       << format_double(consensus_residual[k]) << ',' << format_double(objective[k]) << ','
       << format_double(min_alpha[k]) << ',' << format_double(max_alpha[k]) << ','
       << oracle_calls[k] << '\n';
  }
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : final_states)
    states.push_back({{"x", vector_json(s.x)},
                      {"q", vector_json(s.q)},
                      {"y", vector_json(s.y)},
                      {"alpha_last", s.alpha_last}});
  nlohmann::json j = {
      {"algorithm", algorithm},
      {"rounds", rounds()},
      {"initial_avg_error", initial_avg_error},
      {"final_avg_error", avg_error.empty() ? initial_avg_error : avg_error.back()},
      {"x_star", vector_json(x_star)},
      {"audit",
       {{"armijo_accepted", audit.armijo_accepted},
        {"armijo_certificate_failures", audit.armijo_certificate_failures},
        {"descent_failures", audit.descent_failures},
        {"stepsize_floor_hits", audit.stepsize_floor_hits},
        {"regularization_events", audit.regularization_events},
        {"exact_derivative_calls", audit.exact_derivative_calls},
        {"max_dual_sum_drift", audit.max_dual_sum_drift},
        {"max_y_inconsistency", audit.max_y_inconsistency},
        {"min_accepted_alpha", audit.min_accepted_alpha}}},
      {"final_states", states},
      {"metadata", metadata}};
  if (converged_index) j["converged_index"] = *converged_index;
  return j;
}

}  // namespace zopro
