#include "model_spec.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "threshova/errors.hpp"
#include "threshova/io.hpp"

namespace threshova::cli {

namespace {

using nlohmann::json;

Eigen::VectorXd numeric_column(const CsvTable& table, const std::string& name) {
  int c = table.col(name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        parse_double(table.rows[i][static_cast<std::size_t>(c)], static_cast<long>(i) + 2, name);
  return v;
}

std::vector<std::string> string_column(const CsvTable& table, const std::string& name) {
  int c = table.col(name);
  std::vector<std::string> v(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    v[i] = table.rows[i][static_cast<std::size_t>(c)];
  return v;
}

SigmaEstimator parse_sigma(const std::string& s) {
  if (s == "unbiased") return SigmaEstimator::unbiased();
  if (s == "mad") return SigmaEstimator::mad();
  if (s.rfind("known:", 0) == 0) {
    double v = parse_double(s.substr(6), 0, "sigma");
    return SigmaEstimator::known(v);
  }
  throw ConfigError("sigma must be 'unbiased', 'mad' or 'known:<value>', got '" + s + "'");
}

RescalePolicy parse_rescale(const std::string& s) {
  if (s == "quantile") return RescalePolicy::QuantileRescale;
  if (s == "mean") return RescalePolicy::MeanRescale;
  if (s == "none") return RescalePolicy::None;
  throw ConfigError("rescale must be 'quantile', 'mean' or 'none', got '" + s + "'");
}

}  // namespace

LoadedModel load_model_spec(const std::string& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw ConfigError("cannot open model spec: " + spec_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("model spec parse error at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }

  LoadedModel model;
  if (!j.contains("data") || !j.contains("response") || !j.contains("blocks"))
    throw ConfigError("model spec needs 'data', 'response' and 'blocks'");

  std::filesystem::path data_path(j.at("data").get<std::string>());
  if (data_path.is_relative())
    data_path = std::filesystem::path(spec_path).parent_path() / data_path;
  CsvTable table = read_csv(data_path.string());
  const auto N = static_cast<Eigen::Index>(table.rows.size());
  if (N == 0) throw IngestionError("data file has no rows: " + data_path.string());

  model.y = numeric_column(table, j.at("response").get<std::string>());

  // Nuisance columns.
  std::vector<Eigen::MatrixXd> nuisance_parts;
  Eigen::Index nuisance_cols = 0;
  if (j.contains("nuisance")) {
    for (const auto& item : j.at("nuisance")) {
      std::string kind = item.at("kind").get<std::string>();
      if (kind == "intercept") {
        nuisance_parts.emplace_back(Eigen::MatrixXd::Ones(N, 1));
      } else if (kind == "continuous") {
        Eigen::MatrixXd m(N, 1);
        m.col(0) = numeric_column(table, item.at("column").get<std::string>());
        nuisance_parts.push_back(std::move(m));
      } else if (kind == "factor") {
        nuisance_parts.push_back(
            encode_factor(string_column(table, item.at("column").get<std::string>())));
      } else {
        throw ConfigError("nuisance kind must be intercept, continuous or factor");
      }
      nuisance_cols += nuisance_parts.back().cols();
    }
  }
  model.design.A.resize(N, nuisance_cols);
  Eigen::Index at = 0;
  for (const auto& part : nuisance_parts) {
    model.design.A.middleCols(at, part.cols()) = part;
    at += part.cols();
  }

  std::set<std::string> names;
  for (const auto& item : j.at("blocks")) {
    BlockSpec bs;
    bs.name = item.at("name").get<std::string>();
    if (!names.insert(bs.name).second)
      throw ConfigError("duplicate block name '" + bs.name + "'");
    std::string mode = item.value("mode", "block");
    if (mode == "block")
      bs.mode = ThresholdMode::Block;
    else if (mode == "coordinate")
      bs.mode = ThresholdMode::Coordinate;
    else
      throw ConfigError("block '" + bs.name + "': mode must be 'block' or 'coordinate'");

    if (item.contains("factor")) {
      std::vector<std::string> levels;
      bs.X = encode_factor(string_column(table, item.at("factor").get<std::string>()), &levels);
      model.coord_names[bs.name] = levels;
    } else if (item.contains("columns")) {
      const auto& cols = item.at("columns");
      bs.X.resize(N, static_cast<Eigen::Index>(cols.size()));
      Eigen::Index c = 0;
      std::vector<std::string> labels;
      for (const auto& cn : cols) {
        bs.X.col(c++) = numeric_column(table, cn.get<std::string>());
        labels.push_back(cn.get<std::string>());
      }
      model.coord_names[bs.name] = labels;
    } else {
      throw ConfigError("block '" + bs.name + "' needs 'factor' or 'columns'");
    }
    model.design.blocks.push_back(std::move(bs));
  }
  if (model.design.blocks.empty()) throw ConfigError("model spec declares no blocks");

  model.alpha = j.value("alpha", 0.05);
  if (!(model.alpha > 0.0 && model.alpha < 1.0))
    throw ConfigError("alpha must lie strictly between 0 and 1");
  model.seed = j.value("seed", std::uint64_t{1});
  model.mc_reps = j.value("mc_reps", 10000);
  model.s = j.value("s", 1.0);
  if (model.s < 1.0) throw ConfigError("smoothness s must be >= 1");
  if (j.contains("rescale")) model.rescale = parse_rescale(j.at("rescale").get<std::string>());
  if (j.contains("sigma")) model.sigma = parse_sigma(j.at("sigma").get<std::string>());
  return model;
}

}  // namespace threshova::cli
