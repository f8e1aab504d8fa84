#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "therif/core/error.hpp"
#include "therif/core/json_io.hpp"
#include "therif/pipeline/pipeline.hpp"
#include "therif/service/http.hpp"
#include "therif/service/service.hpp"
#include "therif/service/store.hpp"
#include "therif/stats/reading.hpp"

namespace therif::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  service::write_file_atomic(path, text);
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

int last_iteration_with_themes(const fs::path& root) {
  int last = -1;
  if (!fs::is_directory(root / "iterations")) return last;
  for (const auto& entry : fs::directory_iterator(root / "iterations")) {
    const auto name = entry.path().filename().string();
    if (name.size() < 2 || name[0] != 'R' || name.find_first_not_of("0123456789", 1) != std::string::npos) continue;
    if (fs::exists(entry.path() / "themes.json")) last = std::max(last, std::stoi(name.substr(1)));
  }
  return last;
}

// seed + stage-2 options live in <root>/service.json once the store exists.
service::ServiceConfig service_config(const fs::path& root, const std::string& config_path, const std::string& token) {
  service::ServiceConfig c;
  c.root = root;
  c.admin_token = token;
  const auto stored = root / "service.json";
  json j = json::object();
  if (!config_path.empty()) {
    j = json::parse(read_file(config_path));
  } else if (fs::exists(stored)) {
    j = json::parse(read_file(stored));
  }
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("stage2")) c.stage2 = j.at("stage2").get<pipeline::Stage2Options>();
  if (j.contains("validation_pool")) c.validation_pool = pipeline::load_validation_pool(j.at("validation_pool").get<std::string>());
  fs::create_directories(root);
  if (!fs::exists(stored)) {
    json out{{"seed", c.seed}, {"stage2", c.stage2}};
    if (j.contains("validation_pool")) out["validation_pool"] = j.at("validation_pool");
    service::write_file_atomic(stored, dump_pretty(out));
  }
  return c;
}

std::string convergence_markdown(const pipeline::ConvergenceReport& r) {
  std::ostringstream out;
  out << "| iteration | sessions | clusters | silhouette | d char (em) | d word (em) | d line | d steps | "
         "adjust (s) | font kept | validation favorite |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : r.iterations) {
    out << "| R" << m.iteration << " | " << m.sessions << " | " << m.cluster_count << " | " << fixed(m.silhouette, 3)
        << " | " << fixed(m.delta_character_spacing_em, 4) << " | " << fixed(m.delta_word_spacing_em, 4) << " | "
        << fixed(m.delta_line_height, 3) << " | " << fixed(m.delta_steps, 2) << " | "
        << fixed(m.mean_adjust_duration_ms / 1000.0, 1) << " | " << fixed(m.font_keep_rate, 3) << " | "
        << fixed(m.validation_favorite_rate, 3) << " |\n";
  }
  return out.str();
}

}  // namespace

std::string export_css(const fs::path& root, const std::string& iteration) {
  int n;
  if (iteration == "last") {
    n = last_iteration_with_themes(root);
    if (n < 0) throw Error("no iteration themes under " + (root / "iterations").string());
  } else {
    try {
      std::size_t used = 0;
      n = std::stoi(iteration, &used);
      if (used != iteration.size() || n < 0) throw std::invalid_argument(iteration);
    } catch (const std::logic_error&) {
      throw RangeError("iteration", "expected 'last' or an iteration index, got " + iteration);
    }
  }
  const auto themes = load_themes(root / "iterations" / ("R" + std::to_string(n)) / "themes.json");
  if (themes.empty()) throw Error("iteration R" + std::to_string(n) + " has no themes");
  std::string out;
  for (const auto& t : themes) {
    if (!out.empty()) out += '\n';
    out += theme_to_css_rule(t);
  }
  return out;
}

std::optional<std::string> report_markdown(const fs::path& root, bool per_group_bounds) {
  std::vector<pipeline::IterationState> states;
  if (fs::exists(root / "iterations")) states = pipeline::load_iterations(root);

  std::vector<stats::ReadingMeasurement> measurements;
  std::map<std::string, Participant> people;
  const auto trials_path = root / "trials.jsonl";
  if (fs::exists(trials_path)) {
    // read through the service so the log is replayed with the scoring rules
    service::ServiceConfig c;
    c.root = root;
    c.read_only = true;
    service::Service svc(c);
    for (const auto& t : svc.trials()) {
      if (!t.closed()) continue;
      measurements.insert(measurements.end(), t.measurements.begin(), t.measurements.end());
      if (t.participant) people[t.participant_id] = *t.participant;
    }
  }
  if (states.empty() && measurements.empty()) return std::nullopt;

  std::ostringstream out;
  out << "# Reading theme report\n\n";
  if (!states.empty()) {
    out << "## Convergence\n\n" << convergence_markdown(pipeline::convergence_report(states)) << "\n";
    out << "## Themes after R" << states.back().index << "\n\n";
    out << "| theme | font | character (em) | word (em) | line height | font size (px) |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& t : states.back().next_themes) {
      out << "| " << t.theme_id << " | " << font_name(t.settings.font) << " | "
          << format_decimal(t.settings.character_spacing_em) << " | " << format_decimal(t.settings.word_spacing_em)
          << " | " << format_decimal(t.settings.line_height) << " | " << format_decimal(t.settings.font_size_px)
          << " |\n";
    }
    out << "\n";
  }
  if (!measurements.empty()) {
    std::map<std::string, std::vector<std::string>> groups;
    std::set<std::string> all;
    for (const auto& m : measurements) all.insert(m.participant_id);
    groups["All participants"] = {all.begin(), all.end()};
    for (const auto& [id, p] : people) {
      groups[p.dyslexia ? "Dyslexia" : "No dyslexia"].push_back(id);
      groups["Age " + std::string(age_bucket_label(p.bucket()))].push_back(id);
    }
    out << "## Reading performance\n\n" << stats::performance_report_markdown(measurements, groups, per_group_bounds);
  }
  return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reading-theme pipeline: simulate, cluster, serve, export-css, report"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run the pipeline headless with simulated participants");
  int iterations = 4, participants = 90, crops = -1, train_crops = -1, epochs = -1;
  std::uint64_t seed = 42;
  std::string population, config_path, out_dir;
  bool planted = false;
  simulate->add_option("--iterations", iterations)->check(CLI::PositiveNumber);
  simulate->add_option("--participants", participants)->check(CLI::Range(2, 100000));
  simulate->add_option("--seed", seed);
  simulate->add_option("--population", population, "population spec JSON")->check(CLI::ExistingFile);
  simulate->add_flag("--planted", planted, "use the three-mode planted population");
  simulate->add_option("--config", config_path, "simulation config JSON; flags override it")->check(CLI::ExistingFile);
  simulate->add_option("--crops", crops, "embedding crops per format");
  simulate->add_option("--train-crops", train_crops, "training crops per format");
  simulate->add_option("--epochs", epochs);
  simulate->add_option("--out", out_dir, "state directory")->required();

  std::string root, service_config_path, admin_token;
  auto root_option = [&](CLI::App* cmd) {
    return cmd->add_option("--root", root, "data root")->envname("THERIF_DATA_ROOT")->required();
  };

  auto* cluster = app.add_subcommand("cluster", "Cluster a closed iteration of a served store");
  int cluster_iteration = 0;
  std::string designer_path;
  bool open_next = false;
  root_option(cluster);
  cluster->add_option("--iteration", cluster_iteration)->required()->check(CLI::NonNegativeNumber);
  cluster->add_option("--designer", designer_path, "designer themes JSON to add")->check(CLI::ExistingFile);
  cluster->add_flag("--open", open_next, "open the next iteration afterwards");
  cluster->add_option("--config", service_config_path)->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  std::string host = "127.0.0.1";
  int port = 8080;
  root_option(serve);
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--admin-token", admin_token)->envname("THERIF_ADMIN_TOKEN");
  serve->add_option("--config", service_config_path)->check(CLI::ExistingFile);

  auto* css = app.add_subcommand("export-css", "Write one CSS rule per theme of an iteration");
  std::string css_iteration = "last", css_out;
  root_option(css);
  css->add_option("--iteration", css_iteration, "'last' or an index");
  css->add_option("--out", css_out);

  auto* report = app.add_subcommand("report", "Convergence and reading-performance tables");
  std::string report_out, csv_out;
  bool per_group = false;
  root_option(report);
  report->add_option("--out", report_out);
  report->add_option("--csv", csv_out, "trial results CSV");
  report->add_flag("--per-group-bounds", per_group);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "therif: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (*simulate) {
      pipeline::SimulationConfig cfg;
      if (!config_path.empty()) cfg = json::parse(read_file(config_path)).get<pipeline::SimulationConfig>();
      if (simulate->count("--iterations") || config_path.empty()) cfg.iterations = iterations;
      if (simulate->count("--participants") || config_path.empty()) cfg.participants = participants;
      if (simulate->count("--seed") || config_path.empty()) cfg.seed = seed;
      if (planted) cfg.population = sim::planted_population_spec();
      if (!population.empty()) cfg.population = sim::load_population_spec(population);
      if (crops > 0) cfg.stage2.crops_per_format = crops;
      if (train_crops > 0) cfg.stage2.train_crops_per_format = train_crops;
      if (epochs > 0) cfg.stage2.train.epochs = epochs;
      const auto result = pipeline::simulate_pipeline(cfg, fs::path(out_dir));
      out << pipeline::convergence_csv(result.report);
      return 0;
    }
    if (*cluster) {
      const std::string token = "cli";
      service::Service svc(service_config(root, service_config_path, token));
      auto check = [&](const service::Response& r) {
        if (r.status >= 300) throw Error(r.body.at("message").get<std::string>() + " " + r.body.at("detail").dump());
        return r;
      };
      const auto n = std::to_string(cluster_iteration);
      const auto r = check(svc.handle("POST", "/iterations/" + n + "/cluster", "", token));
      if (!designer_path.empty()) {
        json body{{"themes", json::parse(read_file(designer_path))}};
        check(svc.handle("POST", "/iterations/" + n + "/designer-themes", body.dump(), token));
      }
      if (open_next) check(svc.handle("POST", "/iterations/" + std::to_string(cluster_iteration + 1) + "/open", "", token));
      out << dump_pretty(r.body.at("report")) << "\n";
      return 0;
    }
    if (*serve) {
      service::Service svc(service_config(root, service_config_path, admin_token));
      if (svc.recovered_bytes() > 0) err << "recovered " << svc.recovered_bytes() << " bytes of torn log tail\n";
      service::HttpServer server(svc);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
      err << "listening on http://" << host << ":" << bound << " (iteration R" << svc.current_iteration() << ")\n";
      return server.listen() ? 0 : 1;
    }
    if (*css) {
      write_output(css_out, export_css(root, css_iteration), out);
      return 0;
    }
    if (*report) {
      const auto md = report_markdown(root, per_group);
      if (!md) {
        err << "therif: store " << root << " has no closed iterations or completed trials\n";
        return 1;
      }
      write_output(report_out, *md, out);
      if (!csv_out.empty()) {
        service::ServiceConfig c;
        c.root = root;
        c.read_only = true;
        std::vector<stats::ReadingMeasurement> ms;
        if (fs::exists(fs::path(root) / "trials.jsonl")) {
          service::Service svc(c);
          for (const auto& t : svc.trials()) ms.insert(ms.end(), t.measurements.begin(), t.measurements.end());
        }
        service::write_file_atomic(csv_out, stats::trial_results_csv(ms));
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "therif: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace therif::cli
