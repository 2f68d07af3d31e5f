#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "jsonout.hpp"
#include "pidopt/extractable.hpp"
#include "pidopt/io.hpp"
#include "pidopt/pid.hpp"
#include "pidopt/version.hpp"

using namespace pidopt;
using pidcli::Json;

namespace {

struct Options {
  std::string input, out, trace;
  std::string unit = "bits";
  std::uint64_t seed = 42;
  double tol = 1e-7;
  double eps = 1e-5;
  int m = 0;  // 0 means |S|
  int restarts = 10;
  int ndirs = 20;
  int attempts = 10000;
  bool exact = false;
};

SolveOptions solver_options(const Options& o) {
  SolveOptions s;
  s.tol_kkt = o.tol;
  return s;
}

Json header(const Options& o, const char* command, const std::string* input_bytes) {
  Json h = Json::object();
  h.set("version", Json::str(kVersion));
  h.set("command", Json::str(command));
  if (input_bytes) h.set("input_hash", Json::str("fnv1a:" + input_hash_hex(*input_bytes)));
  h.set("unit", Json::str(o.unit));
  h.set("seed", Json::integer(static_cast<long long>(o.seed)));
  Json tols = Json::object();
  tols.set("tol_kkt", Json::real(o.tol));
  tols.set("tol_feas", Json::real(SolveOptions{}.tol_feas));
  h.set("tolerances", std::move(tols));
  return h;
}

void emit(const Json& j, const Options& o) {
  std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + o.out + "'");
    f << text;
  }
}

Json values_block(const PidResult& r) {
  Json nats = Json::object();
  nats.set("M", Json::real(r.M));
  nats.set("CI", Json::real(r.CI));
  nats.set("SI", Json::real(r.SI));
  nats.set("UIy", Json::real(r.UIy));
  nats.set("UIz", Json::real(r.UIz));
  Json bits = Json::object();
  bits.set("M", Json::real(nats_to_bits(r.M)));
  bits.set("CI", Json::real(nats_to_bits(r.CI)));
  bits.set("SI", Json::real(nats_to_bits(r.SI)));
  bits.set("UIy", Json::real(nats_to_bits(r.UIy)));
  bits.set("UIz", Json::real(nats_to_bits(r.UIz)));
  Json vals = Json::object();
  vals.set("nats", std::move(nats));
  vals.set("bits", std::move(bits));
  return vals;
}

Json residuals_block(const KktCertificate& cert) {
  Json res = Json::object();
  res.set("primal", Json::real(cert.residual_primal));
  res.set("stationarity", Json::real(cert.residual_stationarity));
  res.set("zero_cells", Json::real(cert.residual_zero_cells));
  return res;
}

std::vector<std::vector<double>> seeded_directions(std::uint64_t seed, int count, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> dirs;
  for (int k = 0; k < count; ++k) {
    std::vector<double> d(n);
    double mean = 0.0;
    for (double& v : d) {
      v = gauss(rng);
      mean += v;
    }
    mean /= double(n);
    double norm = 0.0;
    for (double& v : d) {
      v -= mean;
      norm = std::max(norm, std::abs(v));
    }
    for (double& v : d) v /= norm;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

int cmd_compute(const Options& o) {
  std::string bytes = read_file(o.input);
  auto p = load_distribution(o.input);
  auto report = solve(p, solver_options(o));
  auto r = pid_from_report(p, report);

  Json j = header(o, "compute", &bytes);
  j.set("certified", Json::boolean(report.certified));
  j.set("strict_interior", Json::boolean(report.strict_interior));
  j.set("iterations", Json::integer(report.iterations));
  j.set("values", values_block(r));
  Json ids = Json::object();
  ids.set("total", Json::real(r.residual_total()));
  ids.set("mi_s_y", Json::real(r.residual_y()));
  ids.set("mi_s_z", Json::real(r.residual_z()));
  j.set("identities_residuals", std::move(ids));
  j.set("certificate_residuals", residuals_block(report.certificate));
  emit(j, o);
  return report.certified ? 0 : 3;
}

Json gradient_entries(const JointDistribution& p, const std::vector<double>& g) {
  Json arr = Json::array();
  for (int s = 0; s < p.ns(); ++s)
    for (int y = 0; y < p.ny(); ++y)
      for (int z = 0; z < p.nz(); ++z) {
        double v = g[p.index(s, y, z)];
        if (!std::isfinite(v)) continue;
        Json e = Json::object();
        e.set("s", Json::str(p.labels(Axis::S)[s]));
        e.set("y", Json::str(p.labels(Axis::Y)[y]));
        e.set("z", Json::str(p.labels(Axis::Z)[z]));
        e.set("value", Json::real(v));
        arr.push(std::move(e));
      }
  return arr;
}

int cmd_gradients(const Options& o) {
  std::string bytes = read_file(o.input);
  auto p = load_distribution(o.input);
  auto report = solve(p, solver_options(o));
  if (!report.certified) {
    Json j = header(o, "gradients", &bytes);
    j.set("certified", Json::boolean(false));
    j.set("certificate_residuals", residuals_block(report.certificate));
    emit(j, o);
    return 3;
  }
  auto bundle = pid_gradients(p, report);
  Json j = header(o, "gradients", &bytes);
  j.set("certified", Json::boolean(true));
  j.set("smooth", Json::boolean(bundle.smooth));
  Json g = Json::object();
  g.set("M", gradient_entries(p, bundle.grad_M));
  g.set("CI", gradient_entries(p, bundle.grad_CI));
  g.set("SI", gradient_entries(p, bundle.grad_SI));
  g.set("UIy", gradient_entries(p, bundle.grad_UIy));
  g.set("UIz", gradient_entries(p, bundle.grad_UIz));
  j.set("gradients", std::move(g));
  emit(j, o);
  return 0;
}

int cmd_gradcheck(const Options& o) {
  std::string bytes = read_file(o.input);
  auto p = load_distribution(o.input);
  SolveOptions sopts = solver_options(o);
  auto report = solve(p, sopts);
  if (!report.certified) {
    Json j = header(o, "gradcheck", &bytes);
    j.set("certified", Json::boolean(false));
    emit(j, o);
    return 3;
  }
  auto bundle = pid_gradients(p, report);
  auto dirs = seeded_directions(o.seed, o.ndirs, p.cell_count());

  auto measure_value = [&](const JointDistribution& q, MeasureSelector sel) {
    return pid(q, sopts).value(sel);
  };

  Json per = Json::object();
  double max_dev = 0.0;
  bool pass = true;
  for (auto sel : kAllSelectors) {
    double worst = 0.0;
    for (const auto& d : dirs) {
      std::vector<double> plus(p.pmf()), minus(p.pmf());
      for (std::size_t i = 0; i < plus.size(); ++i) {
        plus[i] += o.eps * d[i];
        minus[i] -= o.eps * d[i];
      }
      double fd = (measure_value(p.with_pmf(plus), sel) - measure_value(p.with_pmf(minus), sel)) /
                  (2.0 * o.eps);
      double gd = 0.0;
      const auto& grad = bundle.grad(sel);
      for (std::size_t i = 0; i < d.size(); ++i) gd += grad[i] * d[i];
      double dev = std::abs(fd - gd) / (1.0 + std::abs(gd));
      worst = std::max(worst, dev);
    }
    Json m = Json::object();
    m.set("max_deviation", Json::real(worst));
    m.set("pass", Json::boolean(worst < 1e-4));
    per.set(selector_name(sel), std::move(m));
    max_dev = std::max(max_dev, worst);
    pass = pass && worst < 1e-4;
  }

  Json j = header(o, "gradcheck", &bytes);
  j.set("eps", Json::real(o.eps));
  j.set("directions", Json::integer(o.ndirs));
  j.set("smooth", Json::boolean(bundle.smooth));
  j.set("result", Json::str(pass ? "pass" : "fail"));
  j.set("max_deviation", Json::real(max_dev));
  j.set("per_measure", std::move(per));
  emit(j, o);
  return pass ? 0 : 3;
}

int cmd_kkt(const Options& o) {
  std::string bytes = read_file(o.input);
  auto p = load_distribution(o.input);
  auto report = solve(p, solver_options(o));
  const auto& cert = report.certificate;

  Json j = header(o, "kkt", &bytes);
  j.set("certified", Json::boolean(report.certified));
  j.set("M_nats", Json::real(report.M));
  j.set("strict_interior", Json::boolean(report.strict_interior));
  j.set("residuals", residuals_block(cert));

  Json lam = Json::array();
  for (int s = 0; s < p.ns(); ++s)
    for (int y = 0; y < p.ny(); ++y) {
      double v = cert.lambda_at(s, y);
      if (!std::isfinite(v)) continue;
      Json e = Json::object();
      e.set("s", Json::str(p.labels(Axis::S)[s]));
      e.set("y", Json::str(p.labels(Axis::Y)[y]));
      e.set("value", Json::real(v));
      lam.push(std::move(e));
    }
  j.set("lambda", std::move(lam));
  Json mu = Json::array();
  for (int s = 0; s < p.ns(); ++s)
    for (int z = 0; z < p.nz(); ++z) {
      double v = cert.mu_at(s, z);
      if (!std::isfinite(v)) continue;
      Json e = Json::object();
      e.set("s", Json::str(p.labels(Axis::S)[s]));
      e.set("z", Json::str(p.labels(Axis::Z)[z]));
      e.set("value", Json::real(v));
      mu.push(std::move(e));
    }
  j.set("mu", std::move(mu));

  // condition-(b) exponential sums on the zero-mass (y,z) blocks
  Json zb = Json::array();
  for (int y = 0; y < p.ny(); ++y)
    for (int z = 0; z < p.nz(); ++z) {
      double tot = 0.0;
      bool any = false;
      for (int s = 0; s < p.ns(); ++s) {
        tot += report.coupling.at(s, y, z);
        any = any || report.coupling.is_admissible(s, y, z);
      }
      if (!any || tot > SolveOptions{}.tau) continue;
      double sum = 0.0;
      for (int s = 0; s < p.ns(); ++s)
        if (report.coupling.is_admissible(s, y, z))
          sum += std::exp(cert.lambda_at(s, y) + cert.mu_at(s, z));
      Json e = Json::object();
      e.set("y", Json::str(p.labels(Axis::Y)[y]));
      e.set("z", Json::str(p.labels(Axis::Z)[z]));
      e.set("exp_sum", Json::real(sum));
      zb.push(std::move(e));
    }
  j.set("zero_blocks", std::move(zb));

  Json q = Json::array();
  for (int s = 0; s < p.ns(); ++s)
    for (int y = 0; y < p.ny(); ++y)
      for (int z = 0; z < p.nz(); ++z) {
        if (!report.coupling.is_admissible(s, y, z)) continue;
        Json e = Json::object();
        e.set("s", Json::str(p.labels(Axis::S)[s]));
        e.set("y", Json::str(p.labels(Axis::Y)[y]));
        e.set("z", Json::str(p.labels(Axis::Z)[z]));
        e.set("q", Json::real(report.coupling.at(s, y, z)));
        q.push(std::move(e));
      }
  j.set("coupling", std::move(q));
  emit(j, o);
  return report.certified ? 0 : 3;
}

int cmd_extract(const Options& o) {
  std::string bytes = read_file(o.input);
  auto p = load_distribution(o.input);
  int m = o.m > 0 ? o.m : p.ns();

  bool ext_available = std::pow(double(m), double(p.ns())) <= 1e6;
  if (o.exact && !ext_available)
    throw EnumerationTooLarge("si_ext would enumerate more than 1e6 maps");

  ClubOptions copts;
  copts.restarts = o.restarts;
  copts.seed = o.seed;
  copts.solver = solver_options(o);
  auto club = si_club(p, m, copts);

  Json j = header(o, "extract", &bytes);
  j.set("m", Json::integer(m));
  j.set("restarts", Json::integer(o.restarts));

  Json jc = Json::object();
  jc.set("value_nats", Json::real(club.value));
  jc.set("value_bits", Json::real(nats_to_bits(club.value)));
  jc.set("certified", Json::boolean(false));
  jc.set("restarts_used", Json::integer(club.restarts_used));
  Json rows = Json::array();
  for (int t = 0; t < club.argmax.rows(); ++t) {
    Json row = Json::array();
    for (int s = 0; s < club.argmax.cols(); ++s) row.push(Json::real(club.argmax.at(t, s)));
    rows.push(std::move(row));
  }
  jc.set("argmax", std::move(rows));
  j.set("club", std::move(jc));

  if (ext_available) {
    auto ext = si_ext(p, m);
    Json je = Json::object();
    je.set("value_nats", Json::real(ext.value));
    je.set("value_bits", Json::real(nats_to_bits(ext.value)));
    je.set("certified", Json::boolean(true));
    Json map = Json::array();
    for (int v : ext.argmax_map) map.push(Json::integer(v));
    je.set("map", std::move(map));
    je.set("club_minus_ext_nats", Json::real(club.value - ext.value));
    j.set("ext", std::move(je));
  }

  if (!o.trace.empty()) {
    std::ofstream f(o.trace, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + o.trace + "'");
    f << "restart,iteration,objective_nats\n";
    char buf[96];
    for (const auto& t : club.trace) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g\n", t.restart, t.iteration, t.objective);
      f << buf;
    }
  }
  emit(j, o);
  return 0;
}

Json witness_json(const JointDistribution& p) {
  Json arr = Json::array();
  for (int s = 0; s < p.ns(); ++s)
    for (int y = 0; y < p.ny(); ++y)
      for (int z = 0; z < p.nz(); ++z) {
        Json e = Json::object();
        e.set("s", Json::str(p.labels(Axis::S)[s]));
        e.set("y", Json::str(p.labels(Axis::Y)[y]));
        e.set("z", Json::str(p.labels(Axis::Z)[z]));
        e.set("p", Json::real(p.at(s, y, z)));
        arr.push(std::move(e));
      }
  return arr;
}

int cmd_witness(const Options& o) {
  std::string bytes;
  bool have_input = !o.input.empty();
  if (have_input) bytes = read_file(o.input);  // hashed into the report only

  auto all = nonconvexity_witness_all(o.attempts, o.seed, 1e-4, solver_options(o));

  Json j = header(o, "witness", have_input ? &bytes : nullptr);
  j.set("attempts", Json::integer(o.attempts));
  Json per = Json::object();
  for (int k = 0; k < 4; ++k) {
    const auto& w = all[k];
    Json sel = Json::object();
    auto one = [&](const std::optional<ConvexityWitness>& cw) {
      if (!cw) return Json();
      Json e = Json::object();
      e.set("margin_nats", Json::real(cw->margin));
      e.set("theta", Json::real(cw->theta));
      e.set("p1", witness_json(cw->p1));
      e.set("p2", witness_json(cw->p2));
      return e;
    };
    sel.set("concavity_violation", one(w.concavity_violation));
    sel.set("convexity_violation", one(w.convexity_violation));
    sel.set("attempts_used", Json::integer(w.attempts_used));
    per.set(selector_name(kAllSelectors[k]), std::move(sel));
  }
  j.set("witnesses", std::move(per));
  emit(j, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"BROJA bivariate partial information decomposition"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* c, bool input_required) {
    if (input_required)
      c->add_option("input", o.input, "distribution file (JSON or TSV)")->required();
    else
      c->add_option("input", o.input, "distribution file (JSON or TSV)");
    c->add_option("--unit", o.unit, "display unit: bits or nats")
        ->check(CLI::IsMember({"bits", "nats"}));
    c->add_option("--seed", o.seed, "random seed (default 42)");
    c->add_option("--tol", o.tol, "KKT certificate tolerance");
    c->add_option("--out", o.out, "also write the JSON report to this path");
    return c;
  };

  auto* sc_compute = add_common(app.add_subcommand("compute", "PID values with certificate"), true);
  auto* sc_grad = add_common(app.add_subcommand("gradients", "gradient bundle"), true);
  auto* sc_check = add_common(app.add_subcommand("gradcheck", "finite-difference audit"), true);
  sc_check->add_option("--eps", o.eps, "central-difference step");
  sc_check->add_option("--ndirs", o.ndirs, "number of probe directions");
  auto* sc_kkt = add_common(app.add_subcommand("kkt", "certificate dump"), true);
  auto* sc_extract =
      add_common(app.add_subcommand("extract", "extractable shared information"), true);
  sc_extract->add_option("--m", o.m, "garbling rows (default |S|)");
  sc_extract->add_option("--restarts", o.restarts, "ascent restarts");
  sc_extract->add_option("--trace", o.trace, "write the ascent trace CSV here");
  sc_extract->add_flag("--exact", o.exact, "require the exact enumeration cross-check");
  auto* sc_witness =
      add_common(app.add_subcommand("witness", "non-convexity witness search"), false);
  sc_witness->add_option("--attempts", o.attempts, "search attempts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sc_compute)) return cmd_compute(o);
    if (app.got_subcommand(sc_grad)) return cmd_gradients(o);
    if (app.got_subcommand(sc_check)) return cmd_gradcheck(o);
    if (app.got_subcommand(sc_kkt)) return cmd_kkt(o);
    if (app.got_subcommand(sc_extract)) return cmd_extract(o);
    if (app.got_subcommand(sc_witness)) return cmd_witness(o);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const EnumerationTooLarge& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const UncertifiedSolution& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
