#include "fedheal/report_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedheal {

namespace {

std::string real17(double v) { return fmt::format("{:.17g}", v); }

std::uint64_t parse_digest(const std::string& hex) {
  std::size_t used = 0;
  const auto value = std::stoull(hex, &used, 16);
  if (used != hex.size()) {
    throw std::runtime_error("bad model digest '" + hex + "'");
  }
  return value;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") {
    return ReportFormat::kCsv;
  }
  if (text == "json") {
    return ReportFormat::kJson;
  }
  throw ConfigError("format", "must be csv or json");
}

Json report_to_json(const ExperimentReport& report) {
  Json doc;
  doc["config"] = config_to_json(report.config);
  Json rounds = Json::array();
  for (const auto& r : report.rounds) {
    Json j;
    j["round"] = r.round;
    j["evaluated"] = r.evaluated;
    j["per_domain_accuracy"] = r.per_domain_accuracy;
    j["client_weights"] = r.client_weights;
    j["distance_variance"] = r.distance_variance;
    j["baseline_distance_variance"] = r.baseline_distance_variance;
    j["discarded_fraction"] = r.discarded_fraction;
    j["model_digest"] = fmt::format("{:016x}", r.model_digest);
    rounds.push_back(std::move(j));
  }
  doc["rounds"] = std::move(rounds);
  if (report.final_metrics) {
    doc["final"] = {{"avg", report.final_metrics->avg},
                    {"std", report.final_metrics->std},
                    {"per_domain", report.final_metrics->per_domain}};
  } else {
    doc["final"] = nullptr;
  }
  return doc;
}

ExperimentReport report_from_json(const Json& doc) {
  ExperimentReport report;
  report.config = config_from_json(doc.at("config"));
  for (const auto& j : doc.at("rounds")) {
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.evaluated = j.at("evaluated").get<bool>();
    r.per_domain_accuracy = j.at("per_domain_accuracy").get<std::vector<double>>();
    r.client_weights = j.at("client_weights").get<std::vector<double>>();
    r.distance_variance = j.at("distance_variance").get<double>();
    r.baseline_distance_variance = j.at("baseline_distance_variance").get<double>();
    r.discarded_fraction = j.at("discarded_fraction").get<double>();
    r.model_digest = parse_digest(j.at("model_digest").get<std::string>());
    report.rounds.push_back(std::move(r));
  }
  const auto& final_metrics = doc.at("final");
  if (!final_metrics.is_null()) {
    FairnessMetrics m;
    m.avg = final_metrics.at("avg").get<double>();
    m.std = final_metrics.at("std").get<double>();
    m.per_domain = final_metrics.at("per_domain").get<std::vector<double>>();
    report.final_metrics = std::move(m);
  }
  return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "section,round,domain,value\n";
  for (const auto& r : report.rounds) {
    if (!r.evaluated) {
      continue;
    }
    for (std::size_t d = 0; d < r.per_domain_accuracy.size(); ++d) {
      out << "accuracy," << r.round << ',' << d << ',' << real17(r.per_domain_accuracy[d]) << '\n';
    }
  }
  if (report.final_metrics) {
    out << "summary_avg,,," << real17(report.final_metrics->avg) << '\n';
    out << "summary_std,,," << real17(report.final_metrics->std) << '\n';
    for (std::size_t d = 0; d < report.final_metrics->per_domain.size(); ++d) {
      out << "summary_domain,," << d << ',' << real17(report.final_metrics->per_domain[d]) << '\n';
    }
  }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

void export_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  if (format == ReportFormat::kJson) {
    out << dump_json(report_to_json(report));
  } else {
    write_report_csv(report, out);
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

ExperimentReport import_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return report_from_json(Json::parse(in));
}

Json histogram_to_json(const PucHistogram& hist) {
  Json doc;
  doc["client_id"] = hist.client_id;
  doc["window"] = hist.window;
  doc["first_round"] = hist.first_round;
  doc["bins"] = hist.bins;
  doc["null_bins"] = binomial_bin_null(hist.window);
  Json labels = Json::array();
  for (std::size_t b = 0; b < hist.bins.size(); ++b) {
    labels.push_back(fmt::format("{}-{}%", b * 10, (b + 1) * 10));
  }
  doc["bin_labels"] = std::move(labels);
  doc["mean_consistency"] = hist.mean_consistency();
  doc["consistency"] = hist.consistency;
  return doc;
}

}  // namespace fedheal
