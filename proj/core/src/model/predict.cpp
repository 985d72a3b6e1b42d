#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/model.hpp"

namespace bctrace::model {

const std::vector<std::string>& feature_names(const Model& m) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& { return x.feature_names; }, m);
}

std::string_view kind_name(const Model& m) {
  switch (m.index()) {
    case 0: return "gbt";
    case 1: return "forest";
    default: return "linear";
  }
}

double predict_row(const GbtModel& m, std::span<const double> row) {
  double s = 0.0;
  for (const auto& t : m.trees) s += t.predict(row);
  return m.base_score + m.learning_rate * s;
}

double predict_row(const ForestModel& m, std::span<const double> row) {
  if (m.trees.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < m.trees.size(); ++i) s += m.tree_base[i] + m.trees[i].predict(row);
  return s / static_cast<double>(m.trees.size());
}

double predict_row(const LinearModel& m, std::span<const double> row) {
  double s = m.intercept;
  for (std::size_t i = 0; i < m.coefficients.size(); ++i) s += m.coefficients[i] * row[i];
  return s;
}

double predict_row(const Model& m, std::span<const double> row) {
  return std::visit([&](const auto& x) { return predict_row(x, row); }, m);
}

std::vector<double> predict(const Model& m, const Dataset& data) {
  const auto& names = feature_names(m);
  if (names != data.feature_names) {
    throw Error(ErrorCode::kSchemaMismatch,
                fmt::format("model expects [{}], table has [{}]", fmt::join(names, ", "),
                            fmt::join(data.feature_names, ", ")));
  }
  data.check_shape();
  std::vector<double> out(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) out[r] = predict_row(m, data.row(r));
  return out;
}

}  // namespace bctrace::model
