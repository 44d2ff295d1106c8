// Command-line front end. Each verb parses input, calls the library and writes
// the result; exit codes are 0 success, 2 usage/input error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "hcs/hcs.hpp"

using namespace hcs;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kUsage = 2, kNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  bool json = false;
  uint64_t seed = 1;
  double tol = 0;
  int N = 64;
  int n = 0;
  std::string config;
  std::string input;
};

fs::path out_dir() {
  const char* d = std::getenv("HCS_OUT_DIR");
  fs::path p = d && *d ? fs::path(d) : fs::current_path();
  fs::create_directories(p);
  return p;
}

// Writes to a temporary sibling and renames it into place.
fs::path write_atomic(const std::string& name, const std::string& body) {
  fs::path dst = out_dir() / name;
  fs::path tmp = dst;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw UsageError("cannot write " + tmp.string());
    os << body;
    if (!os.flush()) throw UsageError("write failed: " + tmp.string());
  }
  fs::rename(tmp, dst);
  return dst;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string need_input(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  return o.input;
}

cplx to_cplx(const nlohmann::json& v) {
  return v.is_array() ? cplx(v.at(0).get<double>(), v.at(1).get<double>()) : cplx(v.get<double>());
}

void emit(const Options& o, const nlohmann::json& j, const std::string& text) {
  if (o.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

CLI::Option* find_option(CLI::App* a, const std::string& name) {
  try {
    return a->get_option(name);
  } catch (const CLI::OptionNotFound&) {
    return nullptr;
  }
}

// Config file values fill options that were not given on the command line.
void apply_config(CLI::App& app, const std::string& path) {
  if (path.empty()) return;
  auto cfg = read_json(path);
  if (!cfg.is_object()) throw UsageError("config: expected an object");
  for (auto& [key, val] : cfg.items()) {
    CLI::Option* opt = find_option(&app, "--" + key);
    for (auto* sub : app.get_subcommands())
      if (!opt) opt = find_option(sub, "--" + key);
    if (!opt) throw UsageError("config: unknown key " + key);
    if (opt->count() > 0) continue;
    std::string s = val.is_string() ? val.get<std::string>() : val.dump();
    if (val.is_boolean()) s = val.get<bool>() ? "true" : "false";
    opt->clear();
    opt->add_result(s);
    opt->run_callback();
  }
}

// ---------------------------------------------------------------------------

int cmd_verify(const Options& o, const std::string& suite, bool perturb) {
  SuiteConfig c;
  c.n = o.n;
  c.seed = o.seed;
  c.tol = o.tol;
  c.perturb_mu1 = perturb;
  SuiteReport r;
  try {
    r = run_suite(suite, c);
  } catch (const UnknownSuite& e) {
    throw UsageError(e.what());
  }
  std::ostringstream txt;
  for (auto& k : r.cases) {
    txt << (k.pass ? "PASS " : "FAIL ") << k.name << " (residual " << k.residual << ")";
    if (!k.detail.empty()) txt << ": " << k.detail;
    txt << "\n";
  }
  txt << r.suite << ": " << r.passed() << " passed, " << r.failed() << " failed, worst residual " << r.worst_residual() << "\n";
  emit(o, r.to_json(), txt.str());
  return r.failed() == 0 ? kOk : kNumeric;
}

int cmd_hilbert(const Options& o, bool poisson) {
  nlohmann::json j;
  if (poisson) {
    int n = o.n > 0 ? o.n : 2;
    PMat P = poisson_matrix(n);
    nlohmann::json rows = nlohmann::json::array();
    for (int a = 0; a < 2 * n; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int b = 0; b < 2 * n; ++b) row.push_back(P(a, b).to_string());
      rows.push_back(row);
    }
    auto ids = big_cell_coord_ids(n);
    nlohmann::json coords = nlohmann::json::array();
    for (int id : ids) coords.push_back(MPoly::var(id).to_string());
    j = {{"n", n}, {"coordinates", coords}, {"poisson", rows}};
  } else {
    BigCellPoint p = o.input.empty() ? BigCellPoint::symbolic(o.n > 0 ? o.n : 2) : BigCellPoint::from_json(read_json(o.input));
    if (p.reduced) p = reduce_point(p);
    j = {{"point", p.to_json()}, {"ideal", p.ideal().to_json()}};
  }
  emit(o, j, j.dump(2) + "\n");
  return kOk;
}

int cmd_conj(const Options& o) {
  JetPoint p = JetPoint::from_json(read_json(need_input(o)));
  auto r = conj_numeric(p.mu, p.t, p.n);
  auto j = r.to_json();
  emit(o, j, j.dump(2) + "\n");
  return kOk;
}

int cmd_gl2(const Options& o, const std::vector<double>& g) {
  JetPoint p = JetPoint::from_json(read_json(need_input(o)));
  auto q = act(GL2Elem::from_real(g[0], g[1], g[2], g[3]), p);
  auto j = q.to_json();
  emit(o, j, j.dump(2) + "\n");
  return kOk;
}

int cmd_lie(const Options& o, bool relations) {
  nlohmann::json j;
  if (relations) {
    j = dn_relations(o.n > 0 ? o.n : 3).to_json();
  } else {
    auto pt = SlicePoint::from_json(read_json(need_input(o)));
    j = {{"point", pt.to_json()}, {"ideal", idealic_map(pt).to_json()}, {"in_hilb", in_hilb(pt.A(), pt.B(), pt.type)}};
  }
  emit(o, j, j.dump(2) + "\n");
  return kOk;
}

// Input: field file with entries a<i><j> of A1 (0-based row, column).
int cmd_gauge(const Options& o) {
  std::istringstream is(read_file(need_input(o)));
  FieldFile ff = read_fields_csv(is);
  int n = ff.header.at("n").get<int>();
  MatrixField A1(n, ff.patch);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      std::string name = "a" + std::to_string(i) + std::to_string(k);
      if (ff.has(name)) A1(i, k) = ff.get(name);
    }
  ParabolicGauge g;
  try {
    g = parabolic_gauge(ff.patch, A1);
  } catch (const DegenerateGauge& e) {
    nlohmann::json j{{"error", e.what()}, {"min_abs", e.min_abs}, {"locus", e.locus}};
    emit(o, j, std::string(e.what()) + "\n");
    return kNumeric;
  }
  std::vector<std::pair<std::string, Field>> out;
  for (int k = 2; k <= n; ++k) out.push_back({"that" + std::to_string(k), g.that[static_cast<size_t>(k)]});
  std::ostringstream csv;
  write_fields_csv(csv, ff.patch, n, out);
  auto path = write_atomic("that.csv", csv.str());
  nlohmann::json j{{"companion_residual", g.companion_residual}, {"trace_defect", g.trace_defect}, {"min_det", g.min_det}, {"output", path.string()}};
  std::ostringstream txt;
  txt << "companion residual " << g.companion_residual << ", trace defect " << g.trace_defect << ", min |det| " << g.min_det << "\nwrote "
      << path.string() << "\n";
  emit(o, j, txt.str());
  return kOk;
}

struct SolveArgs {
  std::string system = "cosh-gordon";
  double t = 0;
  double phi0 = std::nan("");
  std::string boundary, tfile;
};

int cmd_solve(const Options& o, const SolveArgs& a) {
  PdeSystem sys;
  try {
    sys = parse_pde_system(a.system);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  int n = o.n > 0 ? o.n : sys == PdeSystem::CoshGordon ? 2 : 3;
  if (o.N < 4 || o.N > 512) throw UsageError("--N must lie in [4, 512]");
  Patch p = Patch::dirichlet(o.N);
  PdeFields F{sys, n, {}, p.constant(a.t)};
  F.phi.assign(static_cast<size_t>(F.fields()), RField::Zero(p.size(), p.size()));
  if (!std::isnan(a.phi0)) {
    // Radial boundary data for constant |t|.
    RadialProfile prof(sys == PdeSystem::Toda ? PdeSystem::Titeica : sys, std::abs(a.t), a.phi0, p.L());
    for (auto& f : F.phi)
      for (int j = 0; j < p.size(); ++j)
        for (int i = 0; i < p.size(); ++i)
          if (p.on_boundary(i, j)) f(i, j) = prof(std::abs(p.z(i, j)));
  }
  auto check_grid = [&](const FieldFile& ff, const std::string& what) {
    if (ff.patch.size() != p.size() || ff.patch.is_periodic()) throw UsageError(what + ": grid does not match --N on a Dirichlet patch");
  };
  if (!a.boundary.empty()) {
    std::istringstream is(read_file(a.boundary));
    auto ff = read_fields_csv(is);
    check_grid(ff, a.boundary);
    for (int k = 0; k < F.fields(); ++k) F.phi[static_cast<size_t>(k)] = ff.get("phi" + std::to_string(k + 1)).real();
  }
  if (!a.tfile.empty()) {
    std::istringstream is(read_file(a.tfile));
    auto ff = read_fields_csv(is);
    check_grid(ff, a.tfile);
    F.t = ff.get("t");
  }
  NewtonOptions opt;
  if (o.tol > 0) opt.tol = o.tol;
  SolveResult s;
  try {
    s = newton_solve(p, F, opt);
  } catch (const SolverFailure& e) {
    std::ostringstream h;
    h << "iteration,residual\n";
    h.precision(17);
    for (size_t i = 0; i < e.history.size(); ++i) h << i << "," << e.history[i] << "\n";
    auto path = write_atomic("solve_history.csv", h.str());
    nlohmann::json j{{"error", e.what()}, {"history", path.string()}};
    emit(o, j, std::string(e.what()) + "\nwrote " + path.string() + "\n");
    return kNumeric;
  }
  std::vector<std::pair<std::string, Field>> fields;
  for (size_t k = 0; k < s.phi.size(); ++k) fields.push_back({"phi" + std::to_string(k + 1), s.phi[k].cast<cplx>()});
  if (sys != PdeSystem::Toda) fields.push_back({"t", F.t});
  PdeFields solved = F;
  solved.phi = s.phi;
  auto res = scalar_residual(p, solved);
  for (size_t k = 0; k < res.size(); ++k) fields.push_back({"residual" + std::to_string(k + 1), res[k]});
  std::ostringstream csv, hist;
  write_fields_csv(csv, p, n, fields);
  hist << "iteration,residual\n";
  hist.precision(17);
  for (size_t i = 0; i < s.history.size(); ++i) hist << i << "," << s.history[i] << "\n";
  auto fpath = write_atomic("solve_fields.csv", csv.str());
  auto hpath = write_atomic("solve_history.csv", hist.str());
  nlohmann::json j{{"system", to_string(sys)},
                   {"n", n},
                   {"N", o.N},
                   {"iterations", s.iterations},
                   {"scalar_residual", s.scalar_residual},
                   {"flatness_residual", s.flatness_residual},
                   {"flatness_residual_interior", s.flatness_residual_interior},
                   {"fields", fpath.string()},
                   {"history", hpath.string()}};
  std::ostringstream txt;
  txt << to_string(sys) << " N=" << o.N << ": " << s.iterations << " iterations, scalar residual " << s.scalar_residual
      << ", flatness residual " << s.flatness_residual << "\nwrote " << fpath.string() << " and " << hpath.string() << "\n";
  emit(o, j, txt.str());
  return kOk;
}

// field-csv: fields of an input file (or zero potentials on an N grid) plus
// the scalar residual maps of the chosen system.
int emit_field_csv(const Options& o, const std::string& system) {
  PdeSystem sys = parse_pde_system(system);
  std::vector<std::pair<std::string, Field>> out;
  int n;
  if (o.input.empty()) {
    Patch p = Patch::dirichlet(o.N);
    n = o.n > 0 ? o.n : sys == PdeSystem::CoshGordon ? 2 : 3;
    int m = sys == PdeSystem::Toda ? n - 1 : 1;
    for (int k = 1; k <= m; ++k) out.push_back({"phi" + std::to_string(k), p.zero()});
    std::ostringstream csv;
    write_fields_csv(csv, p, n, out);
    auto path = write_atomic("field.csv", csv.str());
    emit(o, {{"output", path.string()}}, "wrote " + path.string() + "\n");
    return kOk;
  }
  std::istringstream is(read_file(o.input));
  auto ff = read_fields_csv(is);
  n = ff.header.at("n").get<int>();
  PdeFields F{sys, n, {}, ff.has("t") ? ff.get("t") : ff.patch.zero()};
  for (int k = 1; k <= F.fields(); ++k) {
    F.phi.push_back(ff.get("phi" + std::to_string(k)).real());
    out.push_back({"phi" + std::to_string(k), ff.get("phi" + std::to_string(k))});
  }
  auto res = scalar_residual(ff.patch, F);
  for (size_t k = 0; k < res.size(); ++k) out.push_back({"residual" + std::to_string(k + 1), res[k]});
  std::ostringstream csv;
  write_fields_csv(csv, ff.patch, n, out);
  auto path = write_atomic("field.csv", csv.str());
  emit(o, {{"output", path.string()}}, "wrote " + path.string() + "\n");
  return kOk;
}

// sheet-csv input: {"n", "N", "mu": {"k": c}, "t": {"k": [c0, c1, ...]}} with
// t_k = sum c_j z^j and constant mu_k; complex numbers as [re, im].
int emit_sheet_csv(const Options& o) {
  auto j = read_json(need_input(o));
  int n = j.at("n").get<int>();
  Patch p = Patch::dirichlet(j.value("N", o.N), j.value("L", 1.0));
  std::vector<Field> mu(static_cast<size_t>(n + 1), p.zero()), t(static_cast<size_t>(n + 1), p.zero());
  auto index = [&](const std::string& k) {
    int i = std::stoi(k);
    if (i < 2 || i > n) throw UsageError("sheet-csv: index " + k + " outside 2..n");
    return static_cast<size_t>(i);
  };
  if (j.contains("mu"))
    for (auto& [k, v] : j.at("mu").items()) mu[index(k)] = p.constant(to_cplx(v));
  for (auto& [k, v] : j.at("t").items()) {
    std::vector<cplx> c;
    for (auto& x : v) c.push_back(to_cplx(x));
    t[index(k)] = p.sample([&](cplx z) {
      cplx s = 0;
      for (size_t d = c.size(); d-- > 0;) s = s * z + c[d];
      return s;
    });
  }
  auto s = spectral_sheets(p, mu, t, n, o.tol > 0 ? o.tol : 1e-6);
  std::ostringstream csv;
  nlohmann::json h = p.header(n);
  h["masked"] = s.masked;
  h["residual"] = s.residual;
  csv << "# " << h.dump() << "\nx,y,masked";
  for (int k = 0; k < n; ++k) csv << ",p" << k << "_re,p" << k << "_im,q" << k << "_re,q" << k << "_im";
  csv << "\n";
  csv.precision(17);
  for (int b = 0; b < p.size(); ++b)
    for (int a = 0; a < p.size(); ++a) {
      bool m = s.mask(a, b) != 0;
      csv << p.coord(a) << "," << p.coord(b) << "," << (m ? 1 : 0);
      for (int k = 0; k < n; ++k) {
        auto val = [&](const Field& f) {
          if (m) return std::string("NA,NA");
          std::ostringstream v;
          v.precision(17);
          v << f(a, b).real() << "," << f(a, b).imag();
          return v.str();
        };
        csv << "," << val(s.p[static_cast<size_t>(k)]) << "," << val(s.q[static_cast<size_t>(k)]);
      }
      csv << "\n";
    }
  auto path = write_atomic("sheets.csv", csv.str());
  nlohmann::json out{{"output", path.string()}, {"masked", s.masked}, {"residual", s.residual}};
  std::ostringstream txt;
  txt << "residual " << s.residual << ", masked nodes " << s.masked << "\nwrote " << path.string() << "\n";
  emit(o, out, txt.str());
  return kOk;
}

// lambda-profile input: {"Phi1": matrix, "A1": matrix, "mu": {"k": c}} with
// constant entries; matrices are row lists of complex numbers.
int emit_lambda_profile(const Options& o, std::vector<double> radii) {
  auto j = read_json(need_input(o));
  Patch p = Patch::periodic(4);
  auto matrix = [&](const char* key) {
    const auto& rows = j.at(key);
    int n = static_cast<int>(rows.size());
    Eigen::MatrixXcd m(n, n);
    for (int a = 0; a < n; ++a) {
      if (static_cast<int>(rows[static_cast<size_t>(a)].size()) != n) throw UsageError(std::string(key) + " must be square");
      for (int b = 0; b < n; ++b) m(a, b) = to_cplx(rows[static_cast<size_t>(a)][static_cast<size_t>(b)]);
    }
    return MatrixField::constant(p, m);
  };
  MatrixField Phi1 = matrix("Phi1"), A1 = matrix("A1");
  int n = Phi1.n;
  if (A1.n != n) throw UsageError("Phi1 and A1 sizes differ");
  std::vector<Field> mu(static_cast<size_t>(n + 1), p.zero());
  if (j.contains("mu"))
    for (auto& [k, v] : j.at("mu").items()) {
      int i = std::stoi(k);
      if (i < 2 || i > n) throw UsageError("mu index outside 2..n");
      mu[static_cast<size_t>(i)] = p.constant(to_cplx(v));
    }
  auto fam = LambdaFamily::standard(p, Phi1, mu, A1);
  LambdaLeading lead;
  try {
    lead = lambda_leading(p, fam, radii);
  } catch (const LeadingTermMismatch& e) {
    emit(o, {{"error", e.what()}}, std::string(e.what()) + "\n");
    return kNumeric;
  }
  auto [te, me] = lead.local_exponents();
  std::ostringstream csv;
  csv.precision(17);
  csv << "radius";
  for (int k = 2; k <= n; ++k) csv << ",that" << k << "_exponent,muhat" << k << "_exponent";
  csv << "\n";
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string("NA");
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  for (size_t r = 0; r < radii.size(); ++r) {
    csv << radii[r];
    for (int k = 2; k <= n; ++k) csv << "," << cell(te[r][static_cast<size_t>(k)]) << "," << cell(me[r][static_cast<size_t>(k)]);
    csv << "\n";
  }
  auto path = write_atomic("lambda_profile.csv", csv.str());
  emit(o, {{"output", path.string()}, {"rows", radii.size()}}, "wrote " + path.string() + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and numeric checks for higher complex structures"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_option("--seed", o.seed, "Seed for randomized cases");
  app.add_option("--tol", o.tol, "Tolerance override")->check(CLI::PositiveNumber);
  app.add_option("--N", o.N, "Grid size");
  app.add_option("--n", o.n, "Size, rank or range restriction");
  app.add_option("--config", o.config, "JSON file with option defaults");
  app.add_option("--input", o.input, "Input file");
  app.fallthrough();

  std::string suite;
  bool perturb = false;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", suite, "Suite name")->required()->check(CLI::IsMember(suite_names()));
  verify->add_flag("--perturb-mu1", perturb, "Negative control: shift mu_1 by a free symbol");

  bool poisson = false;
  auto* hilbert = app.add_subcommand("hilbert", "Big cell point to ideal, or the Poisson bivector");
  hilbert->add_flag("--poisson", poisson, "Print the Poisson matrix at --n");

  auto* conj = app.add_subcommand("conj", "Conjugated structure of a numeric point");

  std::vector<double> g;
  auto* gl2 = app.add_subcommand("gl2", "GL2(R) action");
  auto* gl2act = gl2->add_subcommand("act", "Act by the real matrix [[A,B],[C,D]] on a point");
  gl2act->add_option("matrix", g, "A B C D")->required()->expected(4);
  gl2->require_subcommand(1);

  bool relations = false;
  auto* lie = app.add_subcommand("lie", "Idealic map of a slice point, or type D relations");
  lie->add_flag("--relations", relations, "Report the type D zero-fiber relations at --n");

  auto* gauge = app.add_subcommand("gauge", "Parabolic gauge of a connection field file");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Dirichlet Newton solve of a flat-connection system");
  solve->add_option("system", sa.system, "cosh-gordon, titeica or toda")->required();
  solve->add_option("--t,--t2,--t3", sa.t, "Constant holomorphic differential (real)");
  solve->add_option("--phi0", sa.phi0, "Radial boundary data with this centre value");
  solve->add_option("--boundary", sa.boundary, "Field file with boundary values phi1..");
  solve->add_option("--t-file", sa.tfile, "Field file with the differential t");

  std::string kind, system = "cosh-gordon";
  std::vector<double> radii{1e2, 1e3, 1e4};
  auto* emitc = app.add_subcommand("emit", "Write plot data as CSV");
  emitc->add_option("kind", kind, "field-csv, sheet-csv or lambda-profile")->required()->check(CLI::IsMember({"field-csv", "sheet-csv", "lambda-profile"}));
  emitc->add_option("--system", system, "System for field-csv residual maps");
  emitc->add_option("--radii", radii, "Radii for lambda-profile");

  try {
    app.parse(argc, argv);
    apply_config(app, o.config);
    if (verify->parsed()) return cmd_verify(o, suite, perturb);
    if (hilbert->parsed()) return cmd_hilbert(o, poisson);
    if (conj->parsed()) return cmd_conj(o);
    if (gl2act->parsed()) return cmd_gl2(o, g);
    if (lie->parsed()) return cmd_lie(o, relations);
    if (gauge->parsed()) return cmd_gauge(o);
    if (solve->parsed()) return cmd_solve(o, sa);
    if (emitc->parsed()) {
      if (kind == "field-csv") return emit_field_csv(o, system);
      if (kind == "sheet-csv") return emit_sheet_csv(o);
      return emit_lambda_profile(o, radii);
    }
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
