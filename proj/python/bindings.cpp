#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "antico/config.hpp"
#include "antico/crypto.hpp"
#include "antico/economy.hpp"
#include "antico/experiment.hpp"
#include "antico/transcript.hpp"

namespace py = pybind11;
using namespace antico;

namespace {

// Rationals cross the boundary as fractions.Fraction.
py::object to_fraction(const Rational& r) {
  static py::object fraction = py::module_::import("fractions").attr("Fraction");
  return fraction(py::int_(py::str(boost::multiprecision::numerator(r).str())),
                  py::int_(py::str(boost::multiprecision::denominator(r).str())));
}

Rational from_py(const py::handle& v) {
  py::object f = py::module_::import("fractions").attr("Fraction")(v);
  return Rational(boost::multiprecision::cpp_int(py::str(f.attr("numerator")).cast<std::string>()),
                  boost::multiprecision::cpp_int(py::str(f.attr("denominator")).cast<std::string>()));
}

economy::EconomyParams params(std::int64_t n_agents, std::int64_t n_tasks, Currency reward, Currency cost,
                              Currency d_h) {
  economy::EconomyParams p;
  p.n_agents = n_agents;
  p.n_tasks = n_tasks;
  p.task_reward = reward;
  p.task_cost = cost;
  p.honesty_deposit = d_h;
  p.reporting_deposit = d_h;
  p.validate();
  return p;
}

sim::SimConfig make_config(const py::dict& settings) {
  sim::SimConfig cfg;
  for (auto [k, v] : settings) {
    std::string value;
    if (py::isinstance<py::bool_>(v))
      value = v.cast<bool>() ? "true" : "false";
    else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (auto item : v) value += (value.empty() ? "" : ",") + py::str(item).cast<std::string>();
    } else
      value = py::str(v).cast<std::string>();
    sim::apply_setting(cfg, py::str(k).cast<std::string>(), value);
  }
  cfg.validate();
  return cfg;
}

const char* role_name(sim::Role r) {
  switch (r) {
    case sim::Role::Honest: return "honest";
    case sim::Role::Colluder: return "colluder";
    case sim::Role::Whistleblower: return "whistleblower";
    case sim::Role::MaliciousReporter: return "malicious_reporter";
  }
  return "?";
}

py::dict metrics_dict(const sim::MetricsReport& m) {
  py::dict d;
  for (const auto& c : exp::metric_columns()) d[py::str(c)] = exp::metric_value(m, c);
  d["revenue"] = m.revenue;
  d["advantage"] = m.advantage;
  py::list roles;
  for (auto r : m.roles) roles.append(role_name(r));
  d["roles"] = roles;
  return d;
}

py::dict aggregate_dict(const exp::Aggregate& a) {
  py::dict means, stds;
  for (const auto& [k, s] : a.metrics) {
    means[py::str(k)] = s.mean;
    stds[py::str(k)] = s.std;
  }
  py::dict d;
  d["replicas"] = a.replicas;
  d["mean"] = means;
  d["std"] = stds;
  return d;
}

py::bytes as_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

Bytes from_bytes(const py::bytes& b) {
  std::string s = b;
  return Bytes(s.begin(), s.end());
}

crypto::Ring make_ring(const std::vector<py::bytes>& members) {
  std::vector<crypto::Point> pts;
  for (const auto& m : members) {
    auto p = crypto::Point::from_bytes(from_bytes(m));
    if (!p) throw py::value_error("ring member is not a valid group element");
    pts.push_back(*p);
  }
  return crypto::Ring(std::move(pts));
}

}  // namespace

PYBIND11_MODULE(_antico, m) {
  m.doc() = "Anti-collusion mechanism core";

  py::register_exception<sim::ConfigError>(m, "ConfigError", PyExc_ValueError);

  // economy
  m.def(
      "min_honesty_deposit",
      [](std::int64_t n_agents, std::int64_t n_tasks, Currency reward, Currency cost, std::int64_t n_coll,
         const py::object& k) {
        return to_fraction(economy::min_honesty_deposit_full(params(n_agents, n_tasks, reward, cost, 0), n_coll,
                                                             from_py(k)));
      },
      py::arg("n_agents"), py::arg("n_tasks"), py::arg("reward"), py::arg("cost"), py::arg("n_coll"),
      py::arg("shirked") = 0);
  m.def(
      "conservative_honesty_deposit",
      [](std::int64_t n_agents, std::int64_t n_tasks, Currency reward, Currency cost) {
        return to_fraction(economy::min_honesty_deposit_conservative(params(n_agents, n_tasks, reward, cost, 0)));
      },
      py::arg("n_agents"), py::arg("n_tasks"), py::arg("reward"), py::arg("cost"));
  m.def(
      "defection_dominates",
      [](std::int64_t n_agents, std::int64_t n_tasks, Currency reward, Currency cost, Currency d_h,
         std::int64_t n_coll, const py::object& k) {
        auto p = params(n_agents, n_tasks, reward, cost, d_h);
        return economy::defection_dominates(p, economy::worst_case_plan(p, n_coll, from_py(k))).dominates;
      },
      py::arg("n_agents"), py::arg("n_tasks"), py::arg("reward"), py::arg("cost"), py::arg("honesty_deposit"),
      py::arg("n_coll"), py::arg("shirked") = 0);
  m.def(
      "equilibria",
      [](std::int64_t n_agents, std::int64_t n_tasks, Currency reward, Currency cost, Currency d_h,
         std::int64_t n_coll) {
        auto p = params(n_agents, n_tasks, reward, cost, d_h);
        std::vector<std::string> out;
        for (const auto& prof : economy::enumerate_equilibria(p, economy::worst_case_plan(p, n_coll))) {
          std::string s;
          for (auto c : prof) s += c == economy::Choice::Defect ? 'D' : 'C';
          out.push_back(s);
        }
        return out;
      },
      py::arg("n_agents"), py::arg("n_tasks"), py::arg("reward"), py::arg("cost"), py::arg("honesty_deposit"),
      py::arg("n_coll"));

  // crypto
  m.def(
      "keygen",
      [](const py::bytes& seed) {
        auto kp = crypto::keygen(from_bytes(seed));
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(kp.secret.bytes().data()), 32),
                              py::bytes(reinterpret_cast<const char*>(kp.public_key.bytes().data()), 32));
      },
      py::arg("seed"), "Returns (secret, public) as 32 byte strings.");
  m.def(
      "ring_sign",
      [](const py::bytes& message, const std::vector<py::bytes>& ring, const py::bytes& secret, std::uint64_t nonce) {
        auto s = crypto::Scalar::from_bytes(from_bytes(secret));
        if (!s) throw py::value_error("secret is not a canonical scalar");
        crypto::KeyPair kp{*s, crypto::Point::base_mul(*s)};
        crypto::Entropy e(nonce);
        py::gil_scoped_release release;
        auto sig = crypto::ring_sign(from_bytes(message), make_ring(ring), kp, e).encode();
        py::gil_scoped_acquire acquire;
        return as_bytes(sig);
      },
      py::arg("message"), py::arg("ring"), py::arg("secret"), py::arg("nonce") = 0);
  m.def(
      "ring_verify",
      [](const py::bytes& message, const std::vector<py::bytes>& ring, const py::bytes& sig) {
        try {
          return crypto::ring_verify_encoded(from_bytes(message), make_ring(ring), from_bytes(sig));
        } catch (const std::exception&) {
          return false;
        }
      },
      py::arg("message"), py::arg("ring"), py::arg("signature"));
  m.def(
      "linked",
      [](const py::bytes& a, const py::bytes& b) {
        return crypto::linked(crypto::RingSignature::decode(from_bytes(a)),
                              crypto::RingSignature::decode(from_bytes(b)));
      },
      py::arg("a"), py::arg("b"));

  // simulation
  m.def("config_keys", &sim::config_keys);
  m.def(
      "config",
      [](const py::dict& settings) {
        auto cfg = make_config(settings);
        py::dict d;
        for (const auto& k : sim::config_keys()) d[py::str(k)] = sim::config_value(cfg, k);
        return d;
      },
      py::arg("settings") = py::dict());
  m.def(
      "run_episode",
      [](const py::dict& settings, std::uint64_t replica) {
        auto cfg = make_config(settings);
        sim::EpisodeResult r;
        {
          py::gil_scoped_release release;
          r = sim::run_episode(cfg, replica, {true, std::nullopt});
        }
        py::dict d = metrics_dict(r.metrics);
        d["manager_delta"] = r.manager_delta;
        std::ostringstream t;
        write_transcript(t, r.transcript);
        d["transcript"] = t.str();
        return d;
      },
      py::arg("settings") = py::dict(), py::arg("replica") = 0);
  m.def(
      "run_replicas",
      [](const py::dict& settings, int jobs) {
        auto cfg = make_config(settings);
        std::vector<sim::MetricsReport> reps;
        {
          py::gil_scoped_release release;
          reps = exp::run_replicas(cfg, {jobs, nullptr});
        }
        py::list out;
        for (const auto& r : reps) out.append(metrics_dict(r));
        return out;
      },
      py::arg("settings") = py::dict(), py::arg("jobs") = 0);
  m.def(
      "sweep",
      [](const py::dict& settings, const std::string& parameter, const std::vector<double>& grid, int jobs) {
        auto cfg = make_config(settings);
        auto p = exp::parse_sweep_parameter(parameter);
        if (!p) throw py::value_error("cannot sweep '" + parameter + "'");
        exp::SweepSpec spec{*p, grid};
        spec.validate();
        std::vector<exp::SweepPoint> pts;
        {
          py::gil_scoped_release release;
          pts = exp::sweep(cfg, spec, jobs);
        }
        py::list out;
        for (const auto& pt : pts) {
          py::dict d = aggregate_dict(pt.result);
          d["value"] = pt.value;
          out.append(d);
        }
        return out;
      },
      py::arg("settings"), py::arg("parameter"), py::arg("grid"), py::arg("jobs") = 0);
  m.def(
      "ablate",
      [](const py::dict& settings, int jobs) {
        auto cfg = make_config(settings);
        std::vector<exp::AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = exp::ablate(cfg, jobs);
        }
        py::dict out;
        for (const auto& r : rows) out[py::str(r.variant)] = aggregate_dict(r.result);
        return out;
      },
      py::arg("settings") = py::dict(), py::arg("jobs") = 0);
  m.def(
      "audit",
      [](const std::string& text) {
        std::istringstream in(text);
        auto report = audit_transcript(read_transcript(in));
        py::dict d;
        d["ok"] = report.ok;
        d["timeline"] = report.timeline;
        d["violations"] = report.violations;
        return d;
      },
      py::arg("transcript"));
}
