#include "wristhap/gateway/report.hpp"

#include <fstream>

#include "wristhap/csv.hpp"
#include "wristhap/errors.hpp"
#include "wristhap/gateway/logs.hpp"
#include "wristhap/kernels.hpp"

namespace wristhap::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json wilcoxon_to_json(const stats::WilcoxonResult& r) {
  return {{"W", r.statistic}, {"W_plus", r.w_plus}, {"W_minus", r.w_minus}, {"p_value", r.p_value},
          {"n", r.n},         {"exact", r.exact},    {"degenerate", r.degenerate}};
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

}  // namespace

json summary_to_json(const trial::StudySummary& s) {
  json j;
  j["participants"] = s.participants;
  json cond = json::array();
  for (const auto& [key, c] : s.by_condition) {
    cond.push_back({{"target_N", key.first},
                    {"target", trial::target_label(key.first)},
                    {"mode", trial::to_string(key.second)},
                    {"trials", c.trials},
                    {"successes", c.successes},
                    {"success_rate", c.success_rate()}});
  }
  j["by_condition"] = cond;
  json modes = json::object();
  for (const auto& [mode, m] : s.by_mode) {
    modes[trial::to_string(mode)] = {{"trials", m.overall.trials},
                                     {"successes", m.overall.successes},
                                     {"success_rate", m.overall.success_rate()},
                                     {"mean_tct_s", m.mean_tct ? json(*m.mean_tct) : json(nullptr)},
                                     {"mean_rmse_N", m.mean_rmse},
                                     {"mean_max_ae_N", m.mean_max_ae}};
  }
  j["by_mode"] = modes;
  json tests = json::object();
  for (const auto& [name, r] : s.tests) tests[name] = wilcoxon_to_json(r);
  j["wilcoxon_off_minus_on"] = tests;
  return j;
}

void write_summary(const fs::path& dir, const trial::StudySummary& s) {
  open_out(dir / "summary.json") << summary_to_json(s).dump(2) << '\n';

  std::ofstream csv = open_out(dir / "summary.csv");
  csv << "section,target,mode,trials,successes,success_rate,mean_tct_s,mean_rmse_N,mean_max_ae_N,p_value\n";
  for (const auto& [key, c] : s.by_condition) {
    CsvRow r;
    r.add("condition").add(trial::target_label(key.first)).add(trial::to_string(key.second))
        .add(static_cast<std::uint64_t>(c.trials)).add(static_cast<std::uint64_t>(c.successes)).add(c.success_rate())
        .add("").add("").add("").add("");
    csv << r.str() << '\n';
  }
  for (const auto& [mode, m] : s.by_mode) {
    CsvRow r;
    r.add("mode").add("all").add(trial::to_string(mode)).add(static_cast<std::uint64_t>(m.overall.trials))
        .add(static_cast<std::uint64_t>(m.overall.successes)).add(m.overall.success_rate());
    if (m.mean_tct) {
      r.add(*m.mean_tct);
    } else {
      r.add("");
    }
    r.add(m.mean_rmse).add(m.mean_max_ae).add("");
    csv << r.str() << '\n';
  }
  for (const auto& [name, t] : s.tests) {
    CsvRow r;
    r.add("wilcoxon").add(name).add("off_minus_on").add(static_cast<std::uint64_t>(t.n)).add("").add("").add("")
        .add("").add("").add(t.p_value);
    csv << r.str() << '\n';
  }
}

Fig6Export export_fig6(const fs::path& telemetry_log) {
  std::ifstream in(telemetry_log);
  if (!in) throw ConfigError("cannot open telemetry log " + telemetry_log.string());
  std::string line;
  if (!std::getline(in, line) || line != telemetry_log_header()) {
    throw ConfigError(telemetry_log.string() + ": not a telemetry log (header mismatch)");
  }
  const std::size_t columns = split_csv(telemetry_log_header()).size();

  Fig6Export e;
  std::vector<double> raw[3], comp[3], filt[3], rend[3];
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    const auto f = split_csv(line);
    try {
      if (f.size() != columns) throw ConfigError("expected " + std::to_string(columns) + " fields");
      Fig6Row row;
      row.tick = static_cast<std::uint64_t>(parse_double(f[0]));
      row.t = parse_double(f[1]);
      for (int k = 0; k < 3; ++k) {
        raw[k].push_back(parse_double(f[5 + k]));
        comp[k].push_back(parse_double(f[11 + k]));
        filt[k].push_back(parse_double(f[14 + k]));
        rend[k].push_back(parse_double(f[26 + k]));
      }
      row.contact = f[34] == "1";
      e.rows.push_back(row);
    } catch (const ConfigError& err) {
      for (auto* cols : {raw, comp, filt, rend}) {
        for (int k = 0; k < 3; ++k) cols[k].resize(e.rows.size());
      }
      e.truncated = true;
      e.warning = telemetry_log.string() + " line " + std::to_string(n) + ": " + err.what() +
                  "; exported the " + std::to_string(e.rows.size()) + " rows before it";
      break;
    }
  }

  const std::size_t rows = e.rows.size();
  std::vector<double> out(rows);
  auto fill = [&](std::vector<double>* cols, double Fig6Row::*field) {
    kernels::norms3(cols[0], cols[1], cols[2], out);
    for (std::size_t i = 0; i < rows; ++i) e.rows[i].*field = out[i];
  };
  fill(raw, &Fig6Row::raw_N);
  fill(comp, &Fig6Row::compensated_N);
  fill(filt, &Fig6Row::filtered_N);
  fill(rend, &Fig6Row::rendered_N);

  for (std::size_t i = 0; i < rows; ++i) {
    if (!e.rows[i].contact) continue;
    if (i == 0 || !e.rows[i - 1].contact) e.intervals.push_back({e.rows[i].t, e.rows[i].t});
    e.intervals.back().t_end = e.rows[i].t;
  }
  return e;
}

void write_fig6(const fs::path& stem, const Fig6Export& e) {
  fs::path table = stem;
  table += ".csv";
  fs::path intervals = stem;
  intervals += "_intervals.csv";
  std::ofstream out = open_out(table);
  out << "tick,t,raw_N,compensated_N,filtered_N,rendered_N,contact\n";
  for (const Fig6Row& r : e.rows) {
    CsvRow c;
    c.add(r.tick).add(r.t).add(r.raw_N).add(r.compensated_N).add(r.filtered_N).add(r.rendered_N).add(r.contact);
    out << c.str() << '\n';
  }
  std::ofstream iv = open_out(intervals);
  iv << "interval,t_start,t_end\n";
  for (std::size_t k = 0; k < e.intervals.size(); ++k) {
    CsvRow c;
    c.add(static_cast<std::uint64_t>(k)).add(e.intervals[k].t_start).add(e.intervals[k].t_end);
    iv << c.str() << '\n';
  }
}

}  // namespace wristhap::gateway
