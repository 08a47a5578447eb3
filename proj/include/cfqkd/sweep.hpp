#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cfqkd/experiment.hpp"

namespace cfqkd::sim {

/// Formats a double with 12 significant digits, locale-independent.
inline std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

enum class AdversarySelection : std::uint8_t { None, StrategyI, StrategyII, Auto, Forced };

/// Auto picks the strategy that matches the loss regime.
inline AdversaryMode resolve_adversary(AdversarySelection sel, double eta) {
  switch (sel) {
    case AdversarySelection::None: return AdversaryMode::None;
    case AdversarySelection::StrategyI: return AdversaryMode::StrategyI;
    case AdversarySelection::StrategyII: return AdversaryMode::StrategyII;
    case AdversarySelection::Forced: return AdversaryMode::ForcedAttack;
    default: return eta < 0.5 ? AdversaryMode::StrategyI : AdversaryMode::StrategyII;
  }
}

struct SweepSpec {
  double eta_start = 0.0;
  double eta_end = 1.0;
  int steps = 51;
  std::uint64_t n_rounds = 1'000'000;
  std::uint64_t seed = 1;
  double reflectivity = 0.5;
  AdversarySelection adversary = AdversarySelection::Auto;
  double check_fraction = 0.0;
  bool eve_flip = false;
  bool analytic_only = false;
  unsigned threads = 0;
  double confidence = 0.99;

  void validate() const {
    if (!(eta_start >= 0.0 && eta_end <= 1.0 && eta_start <= eta_end)) {
      throw std::invalid_argument("SweepSpec: need 0 <= eta_start <= eta_end <= 1");
    }
    if (steps < 1) throw std::invalid_argument("SweepSpec: need at least one step");
    if (!analytic_only && n_rounds < 1) {
      throw std::invalid_argument("SweepSpec: need at least one round");
    }
    if (!(reflectivity > 0.0 && reflectivity < 1.0)) {
      throw std::invalid_argument("SweepSpec: reflectivity must lie in (0,1)");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
      throw std::invalid_argument("SweepSpec: confidence must lie in (0,1)");
    }
    if (check_fraction < 0.0 || check_fraction >= 1.0) {
      throw std::invalid_argument("SweepSpec: check fraction must lie in [0,1)");
    }
  }

  double eta_at(int index) const {
    if (steps == 1) return eta_start;
    return eta_start + (eta_end - eta_start) * static_cast<double>(index) /
                           static_cast<double>(steps - 1);
  }
};

/// One sweep row: the closed forms at this loss rate plus, unless the sweep
/// is analytic-only, the Monte Carlo estimates.
struct RateReport {
  double eta = 0.0;
  double r_raw_analytic = 0.0;
  double p_ab_diff_analytic = 0.0;
  double i_ab = 0.0, i_ea = 0.0, i_eb = 0.0;
  double r_secret_fraction = 0.0;            // clamped at zero
  double r_secret_fraction_unclamped = 0.0;
  double r_qkd_analytic = 0.0;
  std::optional<McEstimates> mc{};
};

/// Analytic columns (always the loss-matched strategy) plus one MC run.
inline RateReport analyze_point(const SweepSpec& spec, int index) {
  const double eta = spec.eta_at(index);
  const double r = spec.reflectivity;
  const double t = 1.0 - spec.reflectivity;
  RateReport row;
  row.eta = eta;
  row.r_raw_analytic = analysis::raw_key_rate(eta, r, t);
  row.p_ab_diff_analytic = analysis::ab_joint(eta).diff();
  const analysis::CheatStrategy strategy = analysis::strategy_for(eta);
  row.i_ab = analysis::mutual_information(analysis::ab_joint(eta));
  row.i_ea = analysis::mutual_information(analysis::eve_joint(eta, strategy,
                                                              analysis::Party::Alice));
  row.i_eb = analysis::mutual_information(analysis::eve_joint(eta, strategy,
                                                              analysis::Party::Bob));
  row.r_secret_fraction_unclamped = analysis::secret_fraction(eta, r, t);
  row.r_secret_fraction = std::max(row.r_secret_fraction_unclamped, 0.0);
  row.r_qkd_analytic = analysis::secret_key_rate(eta, r, t);
  if (spec.analytic_only) return row;

  StrategyConfig cfg = make_config(spec.reflectivity, eta,
                                   resolve_adversary(spec.adversary, eta), spec.n_rounds,
                                   spec.seed + static_cast<std::uint64_t>(index));
  RunOptions opts;
  opts.threads = spec.threads;
  opts.check_fraction = spec.check_fraction;
  opts.eve_flip = spec.eve_flip;
  const ExperimentTally tally = run_experiment(cfg, opts);
  row.mc = estimate(tally, opts, spec.confidence,
                    cfg.seed ^ 0x63665f69ull);
  return row;
}

inline std::vector<RateReport> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<RateReport> rows;
  rows.reserve(static_cast<std::size_t>(spec.steps));
  for (int i = 0; i < spec.steps; ++i) rows.push_back(analyze_point(spec, i));
  return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string csv_header() {
  return "eta,r_raw_analytic,r_raw_mc,r_raw_ci,p_ab_diff_analytic,p_ab_diff_mc,p_ab_diff_ci,"
         "i_ab,i_ea,i_eb,r_secret_fraction,r_secret_fraction_unclamped,r_qkd_analytic,"
         "r_qkd_mc,r_qkd_ci";
}

inline std::string csv_row(const RateReport& row) {
  const auto opt = [](bool present, double v) { return present ? format_number(v) : std::string(); };
  const bool mc = row.mc.has_value();
  const bool eve = mc && row.mc->has_eve;
  std::string s;
  s += format_number(row.eta);
  s += ',' + format_number(row.r_raw_analytic);
  s += ',' + opt(mc, mc ? row.mc->r_raw : 0.0);
  s += ',' + opt(mc, mc ? row.mc->r_raw_interval.half_width() : 0.0);
  s += ',' + format_number(row.p_ab_diff_analytic);
  s += ',' + opt(mc, mc ? row.mc->p_ab_diff : 0.0);
  s += ',' + opt(mc, mc ? row.mc->p_ab_diff_interval.half_width() : 0.0);
  s += ',' + format_number(row.i_ab);
  s += ',' + format_number(row.i_ea);
  s += ',' + format_number(row.i_eb);
  s += ',' + format_number(row.r_secret_fraction);
  s += ',' + format_number(row.r_secret_fraction_unclamped);
  s += ',' + format_number(row.r_qkd_analytic);
  s += ',' + opt(eve, eve ? row.mc->r_qkd : 0.0);
  s += ',' + opt(eve, eve ? row.mc->r_qkd_interval.half_width() : 0.0);
  return s;
}

inline std::string to_csv(std::span<const RateReport> rows) {
  std::string out = csv_header();
  out += '\n';
  for (const RateReport& row : rows) {
    out += csv_row(row);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot emission: plain data files plus simple SVG line charts
// ---------------------------------------------------------------------------

namespace detail {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

inline std::string line_chart_svg(const std::string& title, const std::string& x_label,
                                  std::span<const Series> series) {
  constexpr double width = 720, height = 480;
  constexpr double left = 72, right = 24, top = 48, bottom = 56;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  double x_min = 0.0, x_max = 1.0, y_max = 0.0;
  if (!series.empty() && !series.front().points.empty()) {
    x_min = x_max = series.front().points.front().first;
  }
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.05;
  const auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) { return top + plot_h - y / y_max * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "viewBox=\"0 0 720 480\">\n";
  svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + format_number(left) + "\" y1=\"" + format_number(top + plot_h) +
         "\" x2=\"" + format_number(left + plot_w) + "\" y2=\"" + format_number(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_number(left) + "\" y1=\"" + format_number(top) + "\" x2=\"" +
         format_number(left) + "\" y2=\"" + format_number(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double fy = y_max * i / 5.0;
    svg += "<text x=\"" + format_number(px(fx)) + "\" y=\"" + format_number(top + plot_h + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_number(fx) + "</text>\n";
    svg += "<text x=\"" + format_number(left - 8) + "\" y=\"" + format_number(py(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_number(fy) + "</text>\n";
    svg += "<line x1=\"" + format_number(left) + "\" y1=\"" + format_number(py(fy)) +
           "\" x2=\"" + format_number(left + plot_w) + "\" y2=\"" + format_number(py(fy)) +
           "\" stroke=\"#dddddd\"/>\n";
  }
  svg += "<text x=\"" + format_number(left + plot_w / 2) + "\" y=\"" +
         format_number(height - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
         "</text>\n";
  double legend_y = top + 12;
  for (const Series& s : series) {
    std::string path = "M";
    for (const auto& [x, y] : s.points) {
      path += format_number(px(x)) + ' ' + format_number(py(y)) + " L";
    }
    path.resize(path.size() - 2);  // drop trailing " L"
    svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<line x1=\"" + format_number(left + plot_w - 150) + "\" y1=\"" +
           format_number(legend_y) + "\" x2=\"" + format_number(left + plot_w - 126) +
           "\" y2=\"" + format_number(legend_y) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + format_number(left + plot_w - 120) + "\" y=\"" +
           format_number(legend_y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + s.label + "</text>\n";
    legend_y += 18;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace detail

struct PlotFile {
  std::string path;
  std::string contents;
};

/// Two figure families from a sweep: the information curves
/// (I(A;B), min(I(E;A), I(E;B)), secret fraction) and the key-rate curves
/// (raw and secret key rate). Each family gets a plain data file and an SVG.
inline std::vector<PlotFile> render_plots(std::span<const RateReport> rows,
                                          const std::string& prefix) {
  std::vector<PlotFile> files;
  std::string info_dat = "# eta i_ab min_i_e secret_fraction\n";
  std::string rate_dat = "# eta r_raw r_qkd\n";
  detail::Series i_ab{"I(A;B)", "#1f77b4", {}};
  detail::Series i_e{"min(I(E;A),I(E;B))", "#d62728", {}};
  detail::Series r_inf{"secret fraction", "#2ca02c", {}};
  detail::Series r_raw{"raw key rate", "#1f77b4", {}};
  detail::Series r_qkd{"secret key rate", "#d62728", {}};
  for (const RateReport& row : rows) {
    const double min_ie = std::min(row.i_ea, row.i_eb);
    info_dat += format_number(row.eta) + ' ' + format_number(row.i_ab) + ' ' +
                format_number(min_ie) + ' ' + format_number(row.r_secret_fraction_unclamped) +
                '\n';
    rate_dat += format_number(row.eta) + ' ' + format_number(row.r_raw_analytic) + ' ' +
                format_number(row.r_qkd_analytic) + '\n';
    i_ab.points.emplace_back(row.eta, row.i_ab);
    i_e.points.emplace_back(row.eta, min_ie);
    r_inf.points.emplace_back(row.eta, row.r_secret_fraction_unclamped);
    r_raw.points.emplace_back(row.eta, row.r_raw_analytic);
    r_qkd.points.emplace_back(row.eta, row.r_qkd_analytic);
  }
  files.push_back({prefix + "-information.dat", info_dat});
  const detail::Series info_series[] = {i_ab, i_e, r_inf};
  files.push_back({prefix + "-information.svg",
                   detail::line_chart_svg("Mutual information vs loss rate", "loss rate",
                                          info_series)});
  files.push_back({prefix + "-rates.dat", rate_dat});
  const detail::Series rate_series[] = {r_raw, r_qkd};
  files.push_back({prefix + "-rates.svg",
                   detail::line_chart_svg("Key rates vs loss rate", "loss rate", rate_series)});
  return files;
}

// ---------------------------------------------------------------------------
// Per-round record dump
// ---------------------------------------------------------------------------

/// Columnar text dump, one round per line, for offline inspection. Columns:
/// index alice_bit alice_pol bob_basis bob_bit eve_action eve_basis d4
/// loss_ab loss_ba outcome outcome_pol sifted. Absent fields print "-".
inline void dump_rounds(const StrategyConfig& cfg, std::ostream& out) {
  cfg.validate();
  out << "# index alice_bit alice_pol bob_basis bob_bit eve_action eve_basis d4 "
         "loss_ab loss_ba outcome outcome_pol sifted\n";
  for (std::uint64_t i = 0; i < cfg.n_rounds; ++i) {
    RandomStream rng = RandomStream::for_stream(cfg.seed, i);
    const protocol::RoundRecord rec = protocol::run_round(cfg, i, rng);
    out << rec.index << ' ' << rec.alice_bit << ' ' << quantum::symbol_of(rec.alice_pol) << ' '
        << quantum::symbol_of(rec.bob_basis) << ' ' << rec.bob_bit << ' ';
    if (rec.eve_action) {
      switch (rec.eve_action->kind) {
        case adversary::EveAction::Kind::Pass: out << "pass -"; break;
        case adversary::EveAction::Kind::Attack:
          out << "attack " << quantum::symbol_of(rec.eve_action->basis);
          break;
        default: out << "block -"; break;
      }
    } else {
      out << "- -";
    }
    out << ' ' << (rec.d4_clicked ? 1 : 0) << ' ' << (rec.loss_ab ? 1 : 0) << ' '
        << (rec.loss_ba ? 1 : 0) << ' ' << protocol::name_of(rec.outcome) << ' ';
    if (rec.outcome_pol) {
      out << quantum::symbol_of(*rec.outcome_pol);
    } else {
      out << '-';
    }
    out << ' ' << (rec.sifted ? 1 : 0) << '\n';
  }
}

}  // namespace cfqkd::sim
