// lorentz_lab: command-line runs of the library's experiments, each writing a table plus
// a manifest that is sufficient to repeat the run.
//
// Exit codes: 0 all checks pass, 2 checks ran and failed, 1 configuration or usage error.

#include "lorentz.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/version.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

using namespace lorentz;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOutEnv = "LORENTZ_LAB_OUT";

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Result {
  Table table;
  json summary = json::object();
  bool pass = true;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json cell_json(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
  if (auto i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

std::string cell_csv(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return format_double(*d);
  if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

json finite_or_string(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

// ---------------------------------------------------------------------------
// shared run context

struct Run {
  std::string command;
  std::string format = "csv";
  std::string out_dir;
  CLI::App* sub = nullptr;
  std::optional<std::uint64_t> seed;
};

json manifest(const Run& run) {
  json params = json::object();
  std::string rerun = "lorentz_lab " + run.command;
  for (const CLI::Option* opt : run.sub->get_options()) {
    const std::string name = opt->get_single_name();
    // location and parallelism do not change results
    if (name == "help" || name == "out" || name == "threads" || name == "seed" ||
        name.empty())
      continue;
    std::string value;
    if (opt->count() > 0) {
      auto res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    params[name] = value;
    rerun += " --" + name + " " + (value.find(' ') == std::string::npos ? value : "'" + value + "'");
  }
  if (run.seed) rerun += " --seed " + std::to_string(*run.seed);
  json m;
  m["tool"] = "lorentz_lab";
  m["version"] = LORENTZ_VERSION;
  m["command"] = run.command;
  m["params"] = params;
  m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
  m["format"] = run.format;
  m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                    {"boost", BOOST_LIB_VERSION}};
  m["rerun"] = rerun;
  return m;
}

void write_outputs(const Run& run, const Result& r) {
  namespace fs = std::filesystem;
  fs::create_directories(run.out_dir);
  const json m = manifest(run);
  const std::string schema = "lorentz-lab/" + run.command + "/v1";
  const fs::path data = fs::path(run.out_dir) / (run.command + "." + run.format);
  std::ofstream out(data, std::ios::binary);
  if (!out) throw Error(Errc::invalid_input, "cannot write " + data.string());
  if (run.format == "json") {
    json doc;
    doc["schema"] = schema;
    doc["manifest"] = m;
    doc["columns"] = r.table.columns;
    json rows = json::array();
    for (auto& row : r.table.rows) {
      json jr = json::array();
      for (auto& c : row) jr.push_back(cell_json(c));
      rows.push_back(jr);
    }
    doc["rows"] = rows;
    doc["summary"] = r.summary;
    doc["pass"] = r.pass;
    out << doc.dump(2) << "\n";
  } else {
    out << "# schema: " << schema << "\n";
    out << "# manifest: " << m.dump() << "\n";
    out << "# summary: " << r.summary.dump() << "\n";
    out << "# pass: " << (r.pass ? "true" : "false") << "\n";
    for (std::size_t i = 0; i < r.table.columns.size(); ++i) out << (i ? "," : "") << r.table.columns[i];
    out << "\n";
    for (auto& row : r.table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_csv(row[i]);
      out << "\n";
    }
  }
  std::ofstream mf(fs::path(run.out_dir) / (run.command + ".manifest.json"), std::ios::binary);
  mf << m.dump(2) << "\n";
  std::cout << run.command << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.summary.dump() << "\n"
            << "wrote " << data.string() << "\n";
}

// ---------------------------------------------------------------------------
// lie-check

struct LieOpts {
  int n = 3;
};

Result cmd_lie_check(const LieOpts& o) {
  using namespace liealg;
  const int n = o.n;
  const double tol = 1e-10;
  Result r;
  r.table.columns = {"identity", "residual", "tolerance", "pass"};
  auto add = [&](const std::string& name, double residual) {
    const bool ok = residual <= tol;
    r.pass = r.pass && ok;
    r.table.rows.push_back({name, residual, tol, std::string(ok ? "pass" : "fail")});
  };
  const auto gens = generators(n);
  const auto basis = gens.basis();
  double membership = 0.0;
  for (auto& b : basis) membership = std::max(membership, algebra_defect(b));
  membership = std::max({membership, algebra_defect(gens.U), algebra_defect(gens.U_opp)});
  add("generators in so(n,1)", membership);
  const Mat Y = geodesic(n), U = gens.U, Uo = gens.U_opp;
  add("[Y_n,U]=-U", (bracket(Y, U) + U).norm());
  add("[Y_n,U_opp]=U_opp", (bracket(Y, Uo) - Uo).norm());
  add("[U,U_opp]=-2Y_n", (bracket(U, Uo) + 2.0 * Y).norm());
  double anti = 0.0, jac = 0.0, inv = 0.0;
  for (auto& a : basis)
    for (auto& b : basis) {
      anti = std::max(anti, (bracket(a, b) + bracket(b, a)).norm());
      for (auto& c : basis) {
        jac = std::max(jac, (bracket(bracket(a, b), c) + bracket(bracket(b, c), a) + bracket(bracket(c, a), b)).norm());
        inv = std::max(inv, std::abs(killing_form(bracket(a, b), c) + killing_form(b, bracket(a, c))));
      }
    }
  add("antisymmetry", anti);
  add("Jacobi", jac);
  add("Killing ad-invariance", inv);
  const auto cb = centralizer_basis(n);
  double cres = std::abs(static_cast<double>(cb.size()) - centralizer_dim_bruteforce(n));
  for (auto& c : cb) cres = std::max(cres, bracket(c, U).norm());
  add("centralizer of U (dim " + std::to_string(cb.size()) + ")", cres);
  const auto wd = sl2_weight_decompose(n);
  double wres = 0.0;
  int wdim = 0;
  for (auto& s : wd.strings) {
    const int hw = s.highest_weight;
    wdim += static_cast<int>(s.vectors.size());
    for (int i = 0; i <= hw; ++i) {
      wres = std::max(wres, (bracket(Y, s.vectors[i]) - 0.5 * (hw - 2 * i) * s.vectors[i]).norm());
      const Mat up = bracket(U, s.vectors[i]);
      wres = std::max(wres, i < hw ? (up - (i + 1.0) * s.vectors[i + 1]).norm() : up.norm());
    }
  }
  wres = std::max(wres, std::abs(double(wdim) - double(wd.vperp_basis.cols())));
  add("weight strings (" + std::to_string(wd.strings.size()) + ")", wres);
  r.summary = {{"n", n}, {"identities", r.table.rows.size()}, {"centralizer_dim", cb.size()},
               {"weight_strings", wd.strings.size()}};
  return r;
}

// ---------------------------------------------------------------------------
// branching

struct BranchingOpts {
  int n = 3;
  double nu = 0.75, s = 0.0;
  int l_max = 10, m_cutoff = 2000;
};

Result cmd_branching(const BranchingOpts& o) {
  auto sw = reps::branching_sweep(o.n, o.nu, o.s, o.l_max, o.m_cutoff);
  Result r;
  r.table.columns = {"l", "partial_sum", "tail_bound", "decay_exponent"};
  bool finite = true;
  for (auto& row : sw.rows) {
    finite = finite && std::isfinite(row.tail_bound);
    r.table.rows.push_back({(long long)row.l, row.partial_sum, row.tail_bound, row.decay_exponent});
  }
  r.pass = finite && std::isfinite(sw.ratio);
  r.summary = {{"sup", sw.sup}, {"inf", sw.inf}, {"ratio", finite_or_string(sw.ratio)},
               {"verdict", r.pass ? "bounded" : "unbounded"}};
  return r;
}

// ---------------------------------------------------------------------------
// invdist

struct InvdistOpts {
  double nu = 0.25;
  int modes = 128;
  double tolerance = -1.0;
};

Result cmd_invdist(const InvdistOpts& o) {
  auto ctx = reps::make_context(2, o.nu, o.modes);
  auto rep = reps::invariant_distributions(ctx, o.tolerance);
  Result r;
  r.table.columns = {"index", "yn_eigenvalue", "expected", "residual"};
  const double expected[2] = {-(1 + 2 * o.nu) / 2, -(1 - 2 * o.nu) / 2};
  r.pass = rep.found.size() == 2;
  for (std::size_t i = 0; i < rep.found.size(); ++i) {
    const double e = i < 2 ? expected[i] : std::nan("");
    r.table.rows.push_back({(long long)i, rep.found[i].yn_eigenvalue, e, rep.found[i].residual});
    if (i < 2) r.pass = r.pass && std::abs(rep.found[i].yn_eigenvalue - e) <= 1e-3;
  }
  r.summary = {{"found", rep.found.size()},
               {"tolerance", o.tolerance > 0 ? o.tolerance : reps::default_invariant_tolerance(o.modes)},
               {"smallest_singular_values", std::vector<double>(rep.singular_values.data(),
                                                                rep.singular_values.data() +
                                                                    std::min<int>(4, rep.singular_values.size()))}};
  return r;
}

// ---------------------------------------------------------------------------
// shearing

struct ShearingOpts {
  int n = 3;
  std::string dir = "b";
  double mag = 1e-8;
  std::string lambda = "1e3:1e6:13";
  int samples = 1024;
  double eps = 0.0;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(Errc::invalid_input, "bad lambda grid '" + text + "' (expected lo:hi[:count])");
    }
  }
  if (parts.size() < 2 || parts.size() > 3) throw Error(Errc::invalid_input, "lambda grid needs lo:hi[:count]");
  const int count = parts.size() == 3 ? static_cast<int>(parts[2]) : 13;
  if (!(parts[0] > 1 && parts[1] > parts[0] && count >= 2))
    throw Error(Errc::invalid_input, "lambda grid needs 1 < lo < hi and count >= 2");
  return logspace(parts[0], parts[1], count);
}

Result cmd_shearing(const ShearingOpts& o) {
  shearing::ShearingParams p = shearing::with_theta({});
  p.eps = o.eps;
  auto rep = shearing::shearing_experiment(o.n, shearing::parse_direction(o.dir), o.mag, parse_grid(o.lambda), p,
                                           o.samples);
  Result r;
  r.table.columns = {"lambda", "delta", "capped", "s_lambda", "block_length"};
  for (auto& e : rep.entry_names) r.table.columns.push_back(e);
  for (auto& row : rep.rows) {
    std::vector<Cell> cells{row.lambda, row.delta, (long long)row.capped, row.s_lambda, row.block_length};
    for (double v : row.entries) cells.push_back(v);
    r.table.rows.push_back(cells);
  }
  json fits = json::array();
  for (auto& f : rep.fits)
    fits.push_back({{"entry", f.name},
                    {"fitted_exponent", f.fitted_ok ? json(f.fitted) : json(nullptr)},
                    {"predicted", f.predicted},
                    {"pass", f.pass}});
  r.pass = rep.pass;
  r.summary = {{"eps", rep.params.eps}, {"gap_exponent", rep.params.gap_exponent}, {"fits", fits}};
  return r;
}

// ---------------------------------------------------------------------------
// renorm

struct RenormOpts {
  double nu = 0.25, sigma = 1.5, T = 10.0, c0 = 1.0, C = 1.0;
  int steps = 40;
  std::string strategy = "zero";
};

Result cmd_renorm(const RenormOpts& o, std::uint64_t seed) {
  renorm::CascadeParams p;
  p.nu = o.nu;
  p.sigma = o.sigma;
  p.T = o.T;
  p.c0_plus = p.c0_minus = o.c0;
  p.remainder_C = o.C;
  p.steps = o.steps;
  p.strategy = renorm::parse_strategy(o.strategy);
  p.seed = seed;
  auto c = renorm::simulate_cascade(p);
  Result r;
  r.table.columns = {"l",          "lambda",         "c_plus",         "c_minus",        "remainder_bound",
                     "pure_plus",  "pure_minus",     "majorant_plus",  "majorant_minus", "expansion_plus",
                     "expansion_minus"};
  const double rp = renorm::decay_rate(o.nu, renorm::Branch::plus), rm = renorm::decay_rate(o.nu, renorm::Branch::minus);
  bool dominated = true;
  for (std::size_t i = 0; i < c.contraction.size(); ++i) {
    const auto& s = c.contraction[i];
    const double mp = renorm::coefficient_upper_bound(o.nu, o.sigma, o.T, std::abs(o.c0), o.C, s.l, renorm::Branch::plus).exact;
    const double mm = renorm::coefficient_upper_bound(o.nu, o.sigma, o.T, std::abs(o.c0), o.C, s.l, renorm::Branch::minus).exact;
    dominated = dominated && std::abs(s.c_plus) <= mp * (1 + 1e-12) && std::abs(s.c_minus) <= mm * (1 + 1e-12);
    r.table.rows.push_back({(long long)s.l, std::exp(s.l * o.sigma) * o.T, s.c_plus, s.c_minus, s.remainder_bound,
                            o.c0 * std::exp(-rp * o.sigma * s.l), o.c0 * std::exp(-rm * o.sigma * s.l), mp, mm,
                            c.expansion[i].c_plus, c.expansion[i].c_minus});
  }
  r.pass = dominated;
  r.summary = {{"exponent_plus", rp}, {"exponent_minus", rm}, {"dominated", dominated}};
  if (o.steps * o.sigma / std::log(10.0) >= 3) {
    auto d = renorm::continuous_time_exponents(p);
    r.summary["fitted_plus"] = d.fitted_plus;
    r.summary["fitted_minus"] = d.fitted_minus;
    r.summary["decades"] = d.decades;
  }
  return r;
}

// ---------------------------------------------------------------------------
// timechange

struct TimechangeOpts {
  std::string toy = "torus";
  std::string tau = "1 + 0.3*sin(2*pi*(x1 + x2))";
  std::string transfer = "0.05*cos(2*pi*x1)*sin(2*pi*x2)";
  double T = 100.0;
  int points = 21;
};

Result cmd_timechange(const TimechangeOpts& o, std::uint64_t seed) {
  using namespace timechange;
  std::unique_ptr<FlowSystem> flow;
  if (o.toy == "torus") {
    Vec a(2);
    a << 1.0, std::sqrt(2.0);
    flow = std::make_unique<TorusFlow>(a);
  } else if (o.toy == "shear") {
    flow = std::make_unique<ShearFlow>();
  } else {
    throw Error(Errc::invalid_input, "unknown toy '" + o.toy + "' (torus, shear)");
  }
  if (!(o.T > 0) || o.points < 2) throw Error(Errc::invalid_input, "need T > 0 and at least two points");
  auto tc = make_time_change(Observable::parse(o.tau, flow->dim()), *flow);
  auto f = Observable::parse(o.transfer, flow->dim());
  auto r1 = reparametrization(tc);
  auto r2 = cohomologous_partner(tc, f, *flow);
  ScalarField fs = [&](const Vec& x) { return f(x); };
  CounterRng rng(seed, 0);
  const Vec x = flow->sample(rng);
  Result r;
  r.table.columns = {"t", "xi", "inverse_residual", "conjugacy_spatial", "conjugacy_time"};
  double worst_inv = 0.0, worst_sp = 0.0, worst_t = 0.0;
  for (int i = 0; i < o.points; ++i) {
    const double t = o.T * i / (o.points - 1.0);
    const double xi = cocycle_xi(tc, *flow, x, t);
    const double inv = std::abs(inverse_z(tc, *flow, x, xi) - t);
    auto d = transfer_conjugacy(r1, r2, fs, *flow, x, t);
    worst_inv = std::max(worst_inv, inv);
    worst_sp = std::max(worst_sp, d.spatial);
    worst_t = std::max(worst_t, std::abs(d.time));
    r.table.rows.push_back({t, xi, inv, d.spatial, d.time});
  }
  r.pass = worst_inv <= 1e-8 && worst_sp <= 1e-6 && worst_t <= 1e-6;
  json start = json::array();
  for (int i = 0; i < x.size(); ++i) start.push_back(x(i));
  r.summary = {{"flow", flow->name()},       {"start", start},
               {"tau_scale", tc.scale},      {"tau_inf", tc.inf},
               {"tau_sup", tc.sup},          {"max_inverse_residual", worst_inv},
               {"max_spatial_defect", worst_sp}, {"max_time_defect", worst_t}};
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lorentz_lab: reproducible experiments on SO(n,1) representations, shearing and time changes"};
  app.option_defaults()->always_capture_default(true);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LORENTZ_VERSION));

  Run run;
  const char* env_out = std::getenv(kOutEnv);
  run.out_dir = env_out && *env_out ? env_out : ".";
  int threads = 1;
  std::uint64_t seed_value = 0;

  auto common = [&](CLI::App* sub, bool randomized) {
    sub->add_option("--format", run.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", run.out_dir, std::string("Output directory (default $") + kOutEnv + " or .)")
        ->always_capture_default(false);
    sub->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1, 256))
        ->always_capture_default(false);
    auto* s = sub->add_option("--seed", seed_value, "Random seed");
    if (randomized) s->required();
  };

  LieOpts lie;
  auto* c_lie = app.add_subcommand("lie-check", "Structure identities of so(n,1)\n"
                                                "columns: identity,residual,tolerance,pass");
  c_lie->add_option("--n", lie.n, "Dimension n")->check(CLI::Range(2, 8));
  common(c_lie, false);

  BranchingOpts br;
  auto* c_br = app.add_subcommand("branching", "Sobolev branching sums over l\n"
                                               "columns: l,partial_sum,tail_bound,decay_exponent");
  c_br->add_option("--n", br.n, "Dimension n")->check(CLI::Range(3, 8));
  c_br->add_option("--nu", br.nu, "Complementary series parameter");
  c_br->add_option("--s", br.s, "Sobolev order")->check(CLI::NonNegativeNumber);
  c_br->add_option("--l-max", br.l_max, "Largest subgroup degree")->check(CLI::Range(0, 1000));
  c_br->add_option("--m-cutoff", br.m_cutoff, "Largest K-type degree")->check(CLI::Range(4, 1000000));
  common(c_br, false);

  InvdistOpts inv;
  auto* c_inv = app.add_subcommand("invdist", "U-invariant distributions for SO(2,1)\n"
                                              "columns: index,yn_eigenvalue,expected,residual");
  c_inv->add_option("--nu", inv.nu, "Complementary series parameter in (0, 1/2)");
  c_inv->add_option("--modes", inv.modes, "Truncation degree")->check(CLI::Range(64, 1024));
  c_inv->add_option("--tolerance", inv.tolerance, "Singular value tolerance (<= 0: default)");
  common(c_inv, false);

  ShearingOpts sh;
  auto* c_sh = app.add_subcommand("shearing", "Shearing exponents of a displaced orbit pair\n"
                                              "columns: lambda,delta,capped,s_lambda,block_length,<entries>");
  c_sh->add_option("--n", sh.n, "Dimension n")->check(CLI::Range(3, 8));
  c_sh->add_option("--dir", sh.dir, "Displacement direction (b, a-d, c, v0, v1, v2)");
  c_sh->add_option("--mag", sh.mag, "Displacement magnitude");
  c_sh->add_option("--lambda", sh.lambda, "Time grid lo:hi[:count], log spaced");
  c_sh->add_option("--samples", sh.samples, "Samples per trajectory")->check(CLI::Range(16, 1 << 16));
  c_sh->add_option("--eps", sh.eps, "Closeness scale (<= 0: calibrate)");
  common(c_sh, false);

  RenormOpts rn;
  auto* c_rn = app.add_subcommand("renorm", "Renormalization cascade of c_+ and c_-\n"
                                            "columns: l,lambda,c_plus,c_minus,remainder_bound,pure_plus,pure_minus,"
                                            "majorant_plus,majorant_minus,expansion_plus,expansion_minus");
  c_rn->add_option("--nu", rn.nu, "Parameter in (0, 1/2)");
  c_rn->add_option("--sigma", rn.sigma, "Geodesic step in [1, 2]");
  c_rn->add_option("--T", rn.T, "Initial time");
  c_rn->add_option("--steps", rn.steps, "Number of steps")->check(CLI::Range(0, 100000));
  c_rn->add_option("--c0", rn.c0, "Initial coefficient");
  c_rn->add_option("--C", rn.C, "Remainder constant");
  c_rn->add_option("--strategy", rn.strategy, "Remainders: zero, alternating, at-bound, opposing, random");
  common(c_rn, false);

  TimechangeOpts tcopt;
  auto* c_tc = app.add_subcommand("timechange", "Time-change cocycle and transfer conjugacy along one orbit\n"
                                                "columns: t,xi,inverse_residual,conjugacy_spatial,conjugacy_time");
  c_tc->add_option("--toy", tcopt.toy, "Base flow: torus or shear");
  c_tc->add_option("--tau", tcopt.tau, "Time-change density (normalized to mean 1)");
  c_tc->add_option("--transfer", tcopt.transfer, "Transfer function f of the cohomologous partner");
  c_tc->add_option("--T", tcopt.T, "Largest time");
  c_tc->add_option("--points", tcopt.points, "Grid points")->check(CLI::Range(2, 100000));
  common(c_tc, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  run.command = sub->get_name();
  run.sub = sub;
  if (sub->count("--seed")) run.seed = seed_value;
  set_threads(threads);

  try {
    Result r;
    if (sub == c_lie) r = cmd_lie_check(lie);
    else if (sub == c_br) r = cmd_branching(br);
    else if (sub == c_inv) r = cmd_invdist(inv);
    else if (sub == c_sh) r = cmd_shearing(sh);
    else if (sub == c_rn) {
      if (renorm::parse_strategy(rn.strategy) == renorm::Strategy::random && !run.seed)
        throw Error(Errc::invalid_input, "--seed is required for the random strategy");
      r = cmd_renorm(rn, run.seed.value_or(0));
    } else r = cmd_timechange(tcopt, *run.seed);
    write_outputs(run, r);
    return r.pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << run.command << ": error: " << e.what() << "\n";
    return 1;
  }
}
