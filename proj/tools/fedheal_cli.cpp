// fedheal: command-line front end for the federated simulator.
//
//   fedheal run        single experiment, JSON/CSV export
//   fedheal compare    several methods on a shared seed grid
//   fedheal sweep      tau x beta grid
//   fedheal puc-report update-direction consistency histogram for one client
//   fedheal export-federation / show-config   inspection helpers
//
// Exit code 0 on success. On failure a single JSON line is written to
// stderr: {"error": "<kind>", "field": "<config key>", "message": "..."}.

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedheal/config.hpp"
#include "fedheal/datagen.hpp"
#include "fedheal/orchestrator.hpp"
#include "fedheal/parallel.hpp"
#include "fedheal/puc.hpp"
#include "fedheal/report_io.hpp"

namespace {

using fedheal::Json;

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::optional<double> tau;
  std::optional<double> beta;
  std::optional<std::size_t> eval_every;
  std::optional<std::string> std_convention;
  std::size_t workers = 0;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("-c,--config", opts.config_path, "Experiment config (JSON); defaults apply when omitted");
  cmd.add_option("--method", opts.method, "fedavg-proportional | fedavg-uniform | fphl-only | fael-only | fedheal");
  cmd.add_option("--rounds", opts.rounds, "Communication rounds");
  cmd.add_option("--tau", opts.tau, "Consistency threshold in [0,1]");
  cmd.add_option("--beta", opts.beta, "Weight momentum in [0,1]");
  cmd.add_option("--eval-every", opts.eval_every, "Evaluate every N rounds");
  cmd.add_option("--std-convention", opts.std_convention, "population | sample");
  cmd.add_option("--workers", opts.workers, "Worker threads (0 = FEDHEAL_MAX_WORKERS or all cores)");
}

// Config document with command-line overrides applied. The seed override
// also reseeds the federation so generated domains follow it.
Json load_document(const CommonOptions& opts) {
  Json doc = opts.config_path.empty() ? Json{{"method", "fedheal"}} : fedheal::read_config_document(opts.config_path);
  if (!doc.is_object()) {
    throw fedheal::ConfigError("<root>", "must be a JSON object");
  }
  if (opts.method) doc["method"] = *opts.method;
  if (opts.rounds) doc["rounds"] = *opts.rounds;
  if (opts.tau) doc["tau"] = *opts.tau;
  if (opts.beta) doc["beta"] = *opts.beta;
  if (opts.eval_every) doc["eval_every"] = *opts.eval_every;
  if (opts.std_convention) doc["std_convention"] = *opts.std_convention;
  if (opts.seed) {
    doc["seed"] = *opts.seed;
    if (doc.contains("federation") && doc["federation"].is_object()) {
      doc["federation"]["seed"] = *opts.seed;
    }
  }
  return doc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw std::runtime_error("cannot write " + path);
  }
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void print_summary(const fedheal::ExperimentReport& report) {
  const auto& last = report.rounds.back();
  fmt::print("method={} rounds={} seed={}\n", fedheal::to_string(report.config.method), report.config.rounds,
             report.config.seed);
  if (report.final_metrics) {
    fmt::print("AVG={:.4f} STD={:.4f} per_domain=[{:.4f}]\n", report.final_metrics->avg, report.final_metrics->std,
               fmt::join(report.final_metrics->per_domain, ", "));
  } else if (last.evaluated) {
    fmt::print("accuracy (fewer than 5 evaluations, no AVG/STD) = [{:.4f}]\n", fmt::join(last.per_domain_accuracy, ", "));
  }
}

int cmd_run(const CommonOptions& opts, const std::string& json_out, const std::string& csv_out, bool quiet) {
  const auto config = fedheal::config_from_json(load_document(opts));
  const auto report = fedheal::run_experiment(config, {opts.workers, {}});
  if (!json_out.empty()) {
    fedheal::export_report(report, json_out, fedheal::ReportFormat::kJson);
  }
  if (!csv_out.empty()) {
    fedheal::export_report(report, csv_out, fedheal::ReportFormat::kCsv);
  }
  if (!quiet) {
    print_summary(report);
  }
  return 0;
}

struct Cell {
  std::string label;
  fedheal::ExperimentConfig config;
  std::optional<fedheal::FairnessMetrics> metrics;
};

void run_cells(std::vector<Cell>& cells, std::size_t workers) {
  // Cells are independent; each runs its clients sequentially.
  fedheal::parallel_for(cells.size(), workers, [&](std::size_t k) {
    cells[k].metrics = fedheal::run_experiment(cells[k].config, {1, {}}).final_metrics;
  });
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

int cmd_compare(const CommonOptions& opts, std::size_t num_seeds, const std::string& methods_text,
                const std::string& out_path) {
  const auto methods = split_list(methods_text);
  if (methods.empty()) {
    throw fedheal::ConfigError("methods", "at least one method is required");
  }
  std::vector<Cell> cells;
  for (const auto& method : methods) {
    for (std::size_t s = 0; s < num_seeds; ++s) {
      CommonOptions cell_opts = opts;
      cell_opts.method = method;
      cell_opts.seed = *opts.seed + s;
      cells.push_back({method, fedheal::config_from_json(load_document(cell_opts)), std::nullopt});
    }
  }
  run_cells(cells, opts.workers);

  Json summary;
  summary["base_seed"] = *opts.seed;
  summary["num_seeds"] = num_seeds;
  Json per_method = Json::object();
  fmt::print("{:<22} {:>10} {:>10}\n", "method", "median AVG", "median STD");
  for (std::size_t k = 0; k < methods.size(); ++k) {
    std::vector<double> avg;
    std::vector<double> std;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      const auto& m = cells[k * num_seeds + s].metrics;
      if (!m) {
        throw std::runtime_error("compare needs at least five evaluated rounds per run");
      }
      avg.push_back(m->avg);
      std.push_back(m->std);
    }
    fmt::print("{:<22} {:>10.4f} {:>10.4f}\n", methods[k], median(avg), median(std));
    per_method[methods[k]] = {{"avg", avg}, {"std", std}, {"median_avg", median(avg)}, {"median_std", median(std)}};
  }
  summary["methods"] = std::move(per_method);
  if (!out_path.empty()) {
    write_text(out_path, fedheal::dump_json(summary));
  }
  return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& taus_text, const std::string& betas_text,
              std::size_t num_seeds, const std::string& out_path) {
  const auto taus = split_list(taus_text);
  const auto betas = split_list(betas_text);
  std::vector<Cell> cells;
  const std::uint64_t base_seed = opts.seed.value_or(0);
  for (const auto& tau : taus) {
    for (const auto& beta : betas) {
      for (std::size_t s = 0; s < num_seeds; ++s) {
        CommonOptions cell_opts = opts;
        cell_opts.tau = std::stod(tau);
        cell_opts.beta = std::stod(beta);
        cell_opts.seed = base_seed + s;
        cells.push_back({tau + "," + beta, fedheal::config_from_json(load_document(cell_opts)), std::nullopt});
      }
    }
  }
  run_cells(cells, opts.workers);

  std::ostringstream csv;
  csv << "tau,beta,median_avg,median_std\n";
  for (std::size_t k = 0; k < cells.size(); k += num_seeds) {
    std::vector<double> avg;
    std::vector<double> std;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      const auto& m = cells[k + s].metrics;
      if (!m) {
        throw std::runtime_error("sweep needs at least five evaluated rounds per run");
      }
      avg.push_back(m->avg);
      std.push_back(m->std);
    }
    csv << cells[k].label << ',' << fmt::format("{:.17g},{:.17g}", median(avg), median(std)) << '\n';
  }
  std::cout << csv.str();
  if (!out_path.empty()) {
    write_text(out_path, csv.str());
  }
  return 0;
}

int cmd_puc(const CommonOptions& opts, std::size_t client, std::size_t window, const std::string& out_path) {
  Json doc = load_document(opts);
  doc["log_signs"] = true;
  const auto config = fedheal::config_from_json(doc);
  const auto report = fedheal::run_experiment(config, {opts.workers, {}});
  const auto hist = fedheal::puc_report(report, client, window);
  const auto null_bins = fedheal::binomial_bin_null(window);

  fmt::print("client {} (domain {}), rounds {}..{}\n", client,
             client / config.federation.clients_per_domain, hist.first_round, hist.first_round + window - 1);
  fmt::print("{:>9} {:>8} {:>10} {:>12}\n", "bin", "count", "fraction", "iid-null");
  for (std::size_t b = 0; b < hist.bins.size(); ++b) {
    fmt::print("{:>4}-{:<3}% {:>8} {:>10.4f} {:>12.3e}\n", b * 10, (b + 1) * 10, hist.bins[b],
               static_cast<double>(hist.bins[b]) / static_cast<double>(hist.consistency.size()), null_bins[b]);
  }
  const std::size_t high = (9 * window + 9) / 10;
  fmt::print("share with consistency >= {}/{}: {:.4f} (iid null {:.3e})\n", high, window, hist.fraction_at_least(high),
             fedheal::binomial_consistency_tail(window, high));
  if (!out_path.empty()) {
    write_text(out_path, fedheal::dump_json(fedheal::histogram_to_json(hist)));
  }
  return 0;
}

void print_error(const std::string& kind, const std::string& field, const std::string& message) {
  Json line{{"error", kind}};
  if (!field.empty()) {
    line["field"] = field;
  }
  line["message"] = message;
  std::cerr << line.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator: FedAvg baselines and consistency-aware aggregation"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_json;
  std::string run_csv;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(*run, run_opts);
  run->add_option("--seed", run_opts.seed, "Seed for data, initialization and training");
  run->add_option("--json", run_json, "Write the full report as JSON");
  run->add_option("--csv", run_csv, "Write per-round accuracies and the summary as CSV");
  run->add_flag("-q,--quiet", run_quiet, "Do not print the summary");

  CommonOptions cmp_opts;
  std::size_t cmp_seeds = 10;
  std::string cmp_methods = "fedavg-proportional,fedheal";
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "Compare methods over a shared seed grid");
  add_common(*compare, cmp_opts);
  compare->add_option("--seed", cmp_opts.seed, "Base seed; runs use seed, seed+1, ...")->required();
  compare->add_option("--seeds", cmp_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  compare->add_option("--methods", cmp_methods, "Comma-separated methods");
  compare->add_option("--out", cmp_out, "Write per-seed metrics as JSON");

  CommonOptions sweep_opts;
  std::string sweep_taus = "0,0.1,0.2,0.3,0.4,0.5";
  std::string sweep_betas = "0,0.2,0.4,0.6,0.8,1";
  std::size_t sweep_seeds = 3;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Grid over tau and beta");
  add_common(*sweep, sweep_opts);
  sweep->add_option("--seed", sweep_opts.seed, "Base seed");
  sweep->add_option("--taus", sweep_taus, "Comma-separated tau values");
  sweep->add_option("--betas", sweep_betas, "Comma-separated beta values");
  sweep->add_option("--seeds", sweep_seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "Write the grid as CSV");

  CommonOptions puc_opts;
  std::size_t puc_client = 15;
  std::size_t puc_window = 100;
  std::string puc_out;
  auto* puc = app.add_subcommand("puc-report", "Histogram of update-direction consistency for one client");
  add_common(*puc, puc_opts);
  puc->add_option("--seed", puc_opts.seed, "Seed");
  puc->add_option("--client", puc_client, "Client index (default: first client of domain 3)");
  puc->add_option("--window", puc_window, "Trailing rounds to inspect")->check(CLI::PositiveNumber);
  puc->add_option("--out", puc_out, "Write the histogram as JSON");

  CommonOptions fed_opts;
  std::string fed_out;
  auto* export_fed = app.add_subcommand("export-federation", "Dump the generated federation as text records");
  add_common(*export_fed, fed_opts);
  export_fed->add_option("--seed", fed_opts.seed, "Seed");
  export_fed->add_option("--out", fed_out, "Output file")->required();

  CommonOptions show_opts;
  auto* show = app.add_subcommand("show-config", "Print the fully expanded config");
  add_common(*show, show_opts);
  show->add_option("--seed", show_opts.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", "", e.what());
    return 2;
  }

  try {
    if (*run) {
      return cmd_run(run_opts, run_json, run_csv, run_quiet);
    }
    if (*compare) {
      return cmd_compare(cmp_opts, cmp_seeds, cmp_methods, cmp_out);
    }
    if (*sweep) {
      return cmd_sweep(sweep_opts, sweep_taus, sweep_betas, sweep_seeds, sweep_out);
    }
    if (*puc) {
      return cmd_puc(puc_opts, puc_client, puc_window, puc_out);
    }
    if (*export_fed) {
      const auto config = fedheal::config_from_json(load_document(fed_opts));
      fedheal::save_federation(fedheal::make_federation(config.federation), fed_out);
      return 0;
    }
    if (*show) {
      std::cout << fedheal::dump_json(fedheal::config_to_json(fedheal::config_from_json(load_document(show_opts))));
      return 0;
    }
  } catch (const fedheal::ConfigError& e) {
    print_error("config", e.field(), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("runtime", "", e.what());
    return 1;
  }
  return 0;
}
