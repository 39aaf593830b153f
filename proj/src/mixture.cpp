#include "mixkin/mixture.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixkin/rng.hpp"

namespace mixkin {

using nlohmann::json;

std::vector<double> normalize_masses(const std::vector<double>& raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_masses: empty mass list");
  double sum = 0.0;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0)) {
      throw std::invalid_argument("normalize_masses: non-positive mass at index " +
                                  std::to_string(i + 1));
    }
    sum += raw[i];
  }
  std::vector<double> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
  return out;
}

DerivedExponents derive_exponents(const KernelMatrix& k) {
  const int n = k.size;
  DerivedExponents d;
  d.lambda_bar_i.resize(n);
  d.lambda_dbar_i.resize(n);
  d.s_bar_i.resize(n);
  d.s_dbar_i.resize(n);
  d.lambda_bar = d.s_bar = 1e300;
  d.lambda_dbar = d.s_dbar = -1e300;
  d.lambda_natural = d.s_natural = 1e300;
  for (int i = 0; i < n; ++i) {
    double lmin = 1e300, lmax = -1e300, smin = 1e300, smax = -1e300;
    for (int j = 0; j < n; ++j) {
      lmin = std::min(lmin, k.lam(i, j));
      lmax = std::max(lmax, k.lam(i, j));
      smin = std::min(smin, k.sij(i, j));
      smax = std::max(smax, k.sij(i, j));
    }
    d.lambda_bar_i[i] = lmin;
    d.lambda_dbar_i[i] = lmax;
    d.s_bar_i[i] = smin;
    d.s_dbar_i[i] = smax;
    d.lambda_bar = std::min(d.lambda_bar, lmin);
    d.lambda_dbar = std::max(d.lambda_dbar, lmax);
    d.s_bar = std::min(d.s_bar, smin);
    d.s_dbar = std::max(d.s_dbar, smax);
    d.lambda_natural = std::min(d.lambda_natural, lmax);
    d.s_natural = std::min(d.s_natural, smax);
  }
  return d;
}

std::vector<std::string> validate_config(const MixtureConfig& cfg) {
  std::vector<std::string> errs;
  const int n = cfg.n_species();
  if (n == 0) {
    errs.push_back("species: empty");
    return errs;
  }
  double msum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& sp = cfg.species[i];
    if (!(sp.mass > 0.0))
      errs.push_back("species[" + std::to_string(i + 1) + "].mass: must be > 0");
    msum += sp.mass;
    if (sp.init.kind == InitDistribution::Kind::heavy_tail && !(sp.init.tail_exponent > 5.0))
      errs.push_back("species[" + std::to_string(i + 1) +
                     "].init: heavy_tail exponent must be > 5 (finite mass and energy)");
    if (sp.init.kind == InitDistribution::Kind::gaussian && !(sp.init.temperature > 0.0))
      errs.push_back("species[" + std::to_string(i + 1) + "].init: temperature must be > 0");
    if (sp.init.kind == InitDistribution::Kind::uniform_ball && !(sp.init.radius > 0.0))
      errs.push_back("species[" + std::to_string(i + 1) + "].init: radius must be > 0");
    if (!(sp.init.density > 0.0))
      errs.push_back("species[" + std::to_string(i + 1) + "].init: density must be > 0");
  }
  if (std::fabs(msum - 1.0) > 1e-12)
    errs.push_back("species: masses must sum to 1 after normalization");
  const auto& k = cfg.kernel;
  if (k.size != n) errs.push_back("kernel: matrix size does not match species count");
  if (!k.forward_only) errs.push_back("kernel: forward-only support is required");
  if (k.size == n) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        auto at = "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
        if (!(k.lam(i, j) > 0.0 && k.lam(i, j) <= 2.0))
          errs.push_back("kernel.lambda" + at + ": must lie in (0,2]");
        if (!(k.sij(i, j) > 0.0 && k.sij(i, j) < 2.0))
          errs.push_back("kernel.s" + at + ": must lie in open interval (0,2)");
        if (!(k.kap(i, j) > 0.0)) errs.push_back("kernel.kappa" + at + ": must be > 0");
        if (j > i) {
          if (k.lam(i, j) != k.lam(j, i))
            errs.push_back("kernel.lambda: symmetry violated at " + at);
          if (k.sij(i, j) != k.sij(j, i))
            errs.push_back("kernel.s: symmetry violated at " + at);
          if (k.kap(i, j) != k.kap(j, i))
            errs.push_back("kernel.kappa: symmetry violated at " + at);
        }
      }
    }
  }
  if (!(cfg.sim.dt >= 0.0)) errs.push_back("sim.dt: must be >= 0");
  if (!(cfg.sim.t_end >= 0.0)) errs.push_back("sim.t_end: must be >= 0");
  if (!(cfg.sim.angular_cutoff > 0.0 && cfg.sim.angular_cutoff < 1.5707963267948966))
    errs.push_back("sim.angular_cutoff: must lie in (0, pi/2)");
  if (cfg.sim.n_particles == 0) errs.push_back("sim.n_particles: must be > 0");
  return errs;
}

namespace {

double get_num(const json& j, const std::string& path, const char* key,
               std::optional<double> dflt = std::nullopt) {
  if (!j.contains(key)) {
    if (dflt) return *dflt;
    throw ConfigError(path + "." + key, "missing required number");
  }
  if (!j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j[key].get<double>();
}

std::vector<double> get_matrix(const json& j, const std::string& path, const char* key, int n) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing required matrix");
  const json& m = j[key];
  if (!m.is_array() || static_cast<int>(m.size()) != n)
    throw ConfigError(path + "." + key, "expected " + std::to_string(n) + " rows");
  std::vector<double> out;
  out.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    if (!m[i].is_array() || static_cast<int>(m[i].size()) != n)
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]",
                        "expected " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) {
      if (!m[i][k].is_number())
        throw ConfigError(path + "." + key + "[" + std::to_string(i) + "][" +
                          std::to_string(k) + "]", "expected a number");
      out.push_back(m[i][k].get<double>());
    }
  }
  return out;
}

InitDistribution parse_init(const json& j, const std::string& path) {
  InitDistribution d;
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ConfigError(path + ".kind", "expected one of gaussian|heavy_tail|uniform_ball");
  std::string kind = j["kind"].get<std::string>();
  json params = j.contains("params") ? j["params"] : json::object();
  if (kind == "gaussian") {
    d.kind = InitDistribution::Kind::gaussian;
    d.temperature = get_num(params, path + ".params", "temperature", 1.0);
    if (params.contains("mean")) {
      const json& m = params["mean"];
      if (!m.is_array() || m.size() != 3)
        throw ConfigError(path + ".params.mean", "expected a 3-vector");
      d.mean = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()};
    }
  } else if (kind == "heavy_tail") {
    d.kind = InitDistribution::Kind::heavy_tail;
    d.tail_exponent = get_num(params, path + ".params", "p", 7.0);
  } else if (kind == "uniform_ball") {
    d.kind = InitDistribution::Kind::uniform_ball;
    d.radius = get_num(params, path + ".params", "radius", 1.0);
  } else {
    throw ConfigError(path + ".kind", "unknown kind '" + kind + "'");
  }
  d.density = get_num(params, path + ".params", "density", 1.0);
  return d;
}

}  // namespace

MixtureConfig load_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("(root)", std::string("JSON parse failed: ") + e.what());
  }
  MixtureConfig cfg;
  if (!j.contains("species") || !j["species"].is_array() || j["species"].empty())
    throw ConfigError("species", "expected a nonempty array");
  std::vector<double> raw_masses;
  for (size_t i = 0; i < j["species"].size(); ++i) {
    std::string path = "species[" + std::to_string(i) + "]";
    const json& sp = j["species"][i];
    SpeciesParams p;
    p.index = static_cast<int>(i) + 1;
    double m = get_num(sp, path, "mass");
    if (!(m > 0.0)) throw ConfigError(path + ".mass", "must be > 0");
    raw_masses.push_back(m);
    if (sp.contains("init")) p.init = parse_init(sp["init"], path + ".init");
    cfg.species.push_back(p);
  }
  // masses normalized on load; the model assumes they add to unity
  auto nm = normalize_masses(raw_masses);
  for (size_t i = 0; i < nm.size(); ++i) cfg.species[i].mass = nm[i];

  const int n = cfg.n_species();
  if (!j.contains("kernel")) throw ConfigError("kernel", "missing");
  cfg.kernel.size = n;
  cfg.kernel.lambda = get_matrix(j["kernel"], "kernel", "lambda", n);
  cfg.kernel.s = get_matrix(j["kernel"], "kernel", "s", n);
  cfg.kernel.kappa = get_matrix(j["kernel"], "kernel", "kappa", n);

  if (j.contains("sim")) {
    const json& s = j["sim"];
    cfg.sim.dt = get_num(s, "sim", "dt", cfg.sim.dt);
    cfg.sim.t_end = get_num(s, "sim", "t_end", cfg.sim.t_end);
    cfg.sim.n_particles =
        static_cast<std::uint64_t>(get_num(s, "sim", "n_particles", 100000.0));
    cfg.sim.angular_cutoff = get_num(s, "sim", "angular_cutoff", cfg.sim.angular_cutoff);
    cfg.sim.majorant_speed = get_num(s, "sim", "majorant_speed", 0.0);
    cfg.sim.seed = static_cast<std::uint64_t>(get_num(s, "sim", "seed", 1.0));
    cfg.sim.output_every = static_cast<int>(get_num(s, "sim", "output_every", 0.0));
    cfg.sim.pmax = static_cast<int>(get_num(s, "sim", "pmax", 10.0));
    if (s.contains("recenter")) cfg.sim.recenter = s["recenter"].get<bool>();
    if (s.contains("grid_times")) {
      for (const auto& t : s["grid_times"]) cfg.sim.grid_times.push_back(t.get<double>());
    }
    if (s.contains("grid")) {
      cfg.sim.grid.n = static_cast<int>(get_num(s["grid"], "sim.grid", "n", 64.0));
      cfg.sim.grid.half_width = get_num(s["grid"], "sim.grid", "half_width", 0.0);
    }
  }
  if (j.contains("moments") && j["moments"].contains("kappa_gen2"))
    cfg.kappa_gen2 = j["moments"]["kappa_gen2"].get<double>();
  if (j.contains("experiments")) cfg.experiments_json = j["experiments"].dump();

  auto errs = validate_config(cfg);
  if (!errs.empty()) {
    std::string all;
    for (const auto& e : errs) all += (all.empty() ? "" : "; ") + e;
    throw ConfigError(errs.front().substr(0, errs.front().find(':')), all);
  }
  return cfg;
}

MixtureConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

std::string config_canonical_json(const MixtureConfig& cfg) {
  json j;
  for (const auto& sp : cfg.species) {
    json init;
    switch (sp.init.kind) {
      case InitDistribution::Kind::gaussian:
        init = {{"kind", "gaussian"},
                {"params", {{"mean", {sp.init.mean.x, sp.init.mean.y, sp.init.mean.z}},
                            {"temperature", sp.init.temperature},
                            {"density", sp.init.density}}}};
        break;
      case InitDistribution::Kind::heavy_tail:
        init = {{"kind", "heavy_tail"},
                {"params", {{"p", sp.init.tail_exponent}, {"density", sp.init.density}}}};
        break;
      case InitDistribution::Kind::uniform_ball:
        init = {{"kind", "uniform_ball"},
                {"params", {{"radius", sp.init.radius}, {"density", sp.init.density}}}};
        break;
    }
    j["species"].push_back({{"mass", sp.mass}, {"init", init}});
  }
  const int n = cfg.kernel.size;
  auto mat = [&](const std::vector<double>& v) {
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
      json row = json::array();
      for (int k = 0; k < n; ++k) row.push_back(v[i * n + k]);
      rows.push_back(row);
    }
    return rows;
  };
  j["kernel"] = {{"lambda", mat(cfg.kernel.lambda)}, {"s", mat(cfg.kernel.s)},
                 {"kappa", mat(cfg.kernel.kappa)}};
  j["sim"] = {{"dt", cfg.sim.dt}, {"t_end", cfg.sim.t_end},
              {"n_particles", cfg.sim.n_particles},
              {"angular_cutoff", cfg.sim.angular_cutoff},
              {"majorant_speed", cfg.sim.majorant_speed}, {"seed", cfg.sim.seed},
              {"output_every", cfg.sim.output_every}, {"recenter", cfg.sim.recenter},
              {"grid_times", cfg.sim.grid_times},
              {"grid", {{"n", cfg.sim.grid.n}, {"half_width", cfg.sim.grid.half_width}}},
              {"pmax", cfg.sim.pmax}};
  return j.dump();
}

std::uint64_t config_hash(const MixtureConfig& cfg) {
  // FNV-1a over the canonical dump; provenance fingerprint, not cryptographic
  std::string s = config_canonical_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_schema_doc() {
  return R"(mixkinetic configuration (JSON)

{
  "species": [                     // one entry per species, >= 1
    {
      "mass": 1.0,                 // particle mass; normalized so the sum is 1
      "init": {
        "kind": "gaussian",        // gaussian | heavy_tail | uniform_ball
        "params": {
          "mean": [0,0,0],         // gaussian: mean velocity
          "temperature": 1.0,      // gaussian: per-species temperature (T_i = m_i <|v-mean|^2>/3)
          "p": 7.0,                // heavy_tail: decay exponent, must be > 5
          "radius": 1.0,           // uniform_ball: support radius
          "density": 1.0           // statistical mass of the species (integral of f_i)
        }
      }
    }
  ],
  "kernel": {                      // IxI symmetric matrices
    "lambda": [[...]],             // velocity exponents, in (0,2]
    "s":      [[...]],             // angular singularity orders, in (0,2)
    "kappa":  [[...]]              // kernel strength, > 0
  },
  "sim": {
    "dt": 1e-4,                    // time step
    "t_end": 1.0,
    "n_particles": 100000,         // total; split across species by init density
    "angular_cutoff": 1e-2,        // eps: angular truncation shared by sampler and tables
    "majorant_speed": 0.0,         // U_max; 0 = auto (2x the 99.9th pct initial |u|)
    "seed": 1,
    "output_every": 0,             // steps between moment rows; 0 = auto (~200 rows)
    "recenter": true,              // shift initial data so total momentum is 0
    "grid_times": [0.5, 1.0],      // times at which grid snapshots are written
    "grid": { "n": 64, "half_width": 0.0 },  // 0 = auto
    "pmax": 10                     // moment orders 0,2,...,2*pmax plus 2n+lambda_ij
  },
  "moments": { "kappa_gen2": 0.0 },// threshold knob of the H<=KF+L diagnostic; 0 = 3 e^alpha
  "experiments": {                 // optional per-experiment overrides, e.g.
    "e1": { "n_particles": 50000, "t_end": 0.5 }
  }
}

Exit codes: 0 success, 2 missing config file, 3 invalid config.
)";
}

}  // namespace mixkin
