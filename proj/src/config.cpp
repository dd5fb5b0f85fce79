#include "ddshaper/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace ddshaper {

SensorModel Config::sensor_model() const {
  SensorModel m;
  m.gamma = gamma;
  m.t2 = t2;
  m.validate();
  return m;
}

SequenceParams Config::sequence_params() const {
  SequenceParams s{n_pulses, tau, t_pi, shape};
  s.validate();
  return s;
}

WaveformSpec Config::waveform_spec() const {
  WaveformSpec w;
  w.n_pulses = n_pulses;
  w.tau = tau;
  w.t_pi = t_pi;
  w.sample_rate = sample_rate;
  w.vertical_bits = vertical_bits;
  w.shape = shape;
  w.peak_amplitude = peak_amplitude;
  w.n_override = n_override;
  w.validate();
  return w;
}

DriveParams Config::drive_params() const {
  DriveParams d;
  d.t_pi = t_pi;
  d.rabi_peak = rabi_peak.value_or(std::numbers::pi / t_pi);
  d.detuning = detuning;
  d.substeps_per_sample = substeps_per_sample;
  d.sample_rate = sample_rate;
  d.quantize_bits = sim_quantize_bits;
  d.pattern = pattern;
  d.shape = shape;
  d.validate();
  return d;
}

NuclearBath Config::nuclear_bath() const {
  NuclearBath b;
  b.larmor = larmor;
  b.couplings = nuclei;
  if (b.couplings.empty())
    b.couplings.push_back({kTwoPi * 114e3, kTwoPi * 62e3});
  b.validate();
  return b;
}

ScanGrid Config::scan_grid() const {
  ScanGrid g{tau_start, tau_step, n_points};
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// INI parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& section_key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size())
      throw ValidationError(section_key, "not a number: '" + value + "'");
    return v;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError(section_key, "not a number: '" + value + "'");
  }
}

long parse_integer(const std::string& section_key, const std::string& value) {
  const double v = parse_number(section_key, value);
  if (v != std::floor(v))
    throw ValidationError(section_key, "must be an integer");
  return static_cast<long>(v);
}

PhasePattern pattern_from_string(const std::string& name) {
  if (name == "cpmg") return PhasePattern::Cpmg;
  if (name == "xy8") return PhasePattern::Xy8;
  throw ValidationError("drive.phase_pattern",
                        "unknown phase pattern '" + name + "'");
}

const char* pattern_to_string(PhasePattern p) {
  return p == PhasePattern::Cpmg ? "cpmg" : "xy8";
}

// Applies one key of one section to the config; the tables double as the
// key whitelist.
struct Schema {
  using Setter = std::function<void(Config&, const std::string& key,
                                    const std::string& value)>;
  std::map<std::string, std::map<std::string, Setter>> sections;
};

Schema build_schema() {
  auto num = [](double factor, double Config::* field) {
    return [factor, field](Config& c, const std::string& key,
                           const std::string& value) {
      c.*field = factor * parse_number(key, value);
    };
  };
  Schema s;
  auto& sensor = s.sections["sensor"];
  sensor["gamma_ghz_per_t"] = num(kTwoPi * 1e9, &Config::gamma);
  sensor["gamma_rad_per_s_t"] = num(1.0, &Config::gamma);
  sensor["t2_us"] = [](Config& c, const std::string& k, const std::string& v) {
    const double t2 = parse_number(k, v);
    c.t2 = t2 > 0.0 ? std::optional<double>(t2 * 1e-6) : std::nullopt;
  };
  sensor["t2_s"] = [](Config& c, const std::string& k, const std::string& v) {
    const double t2 = parse_number(k, v);
    c.t2 = t2 > 0.0 ? std::optional<double>(t2) : std::nullopt;
  };

  auto& seq = s.sections["sequence"];
  seq["n_pulses"] = [](Config& c, const std::string& k, const std::string& v) {
    c.n_pulses = parse_integer(k, v);
  };
  seq["tau_ns"] = num(1e-9, &Config::tau);
  seq["tau_s"] = num(1.0, &Config::tau);
  seq["t_pi_ns"] = num(1e-9, &Config::t_pi);
  seq["t_pi_s"] = num(1.0, &Config::t_pi);
  seq["shape"] = [](Config& c, const std::string&, const std::string& v) {
    c.shape = pulse_shape_from_string(v);
  };

  auto& drive = s.sections["drive"];
  drive["rabi_mhz"] = [](Config& c, const std::string& k, const std::string& v) {
    c.rabi_peak = kTwoPi * 1e6 * parse_number(k, v);
  };
  drive["rabi_rad_per_s"] = [](Config& c, const std::string& k,
                               const std::string& v) {
    c.rabi_peak = parse_number(k, v);
  };
  drive["detuning_mhz"] = num(kTwoPi * 1e6, &Config::detuning);
  drive["detuning_rad_per_s"] = num(1.0, &Config::detuning);
  drive["substeps_per_sample"] = [](Config& c, const std::string& k,
                                    const std::string& v) {
    c.substeps_per_sample = static_cast<int>(parse_integer(k, v));
  };
  drive["phase_pattern"] = [](Config& c, const std::string&,
                              const std::string& v) {
    c.pattern = pattern_from_string(v);
  };
  drive["quantize_bits"] = [](Config& c, const std::string& k,
                              const std::string& v) {
    const long bits = parse_integer(k, v);
    c.sim_quantize_bits =
        bits > 0 ? std::optional<int>(static_cast<int>(bits)) : std::nullopt;
  };

  auto& bath = s.sections["bath"];
  bath["larmor_mhz"] = num(kTwoPi * 1e6, &Config::larmor);
  bath["larmor_rad_per_s"] = num(1.0, &Config::larmor);

  auto& nucleus = s.sections["nucleus"];
  auto nuc_field = [](double HyperfineCoupling::* field, double factor) {
    return [field, factor](Config& c, const std::string& k,
                           const std::string& v) {
      if (c.nuclei.empty())
        throw ValidationError(k, "internal: no open [nucleus] section");
      c.nuclei.back().*field = factor * parse_number(k, v);
    };
  };
  nucleus["a_par_khz"] = nuc_field(&HyperfineCoupling::a_par, kTwoPi * 1e3);
  nucleus["a_par_rad_per_s"] = nuc_field(&HyperfineCoupling::a_par, 1.0);
  nucleus["a_perp_khz"] = nuc_field(&HyperfineCoupling::a_perp, kTwoPi * 1e3);
  nucleus["a_perp_rad_per_s"] = nuc_field(&HyperfineCoupling::a_perp, 1.0);

  auto& signal = s.sections["signal"];
  auto sig_field = [](double AcSignal::* field, double factor) {
    return [field, factor](Config& c, const std::string& k,
                           const std::string& v) {
      if (c.signals.empty())
        throw ValidationError(k, "internal: no open [signal] section");
      c.signals.back().*field = factor * parse_number(k, v);
    };
  };
  signal["f_ac_mhz"] = sig_field(&AcSignal::f_ac, 1e6);
  signal["f_ac_hz"] = sig_field(&AcSignal::f_ac, 1.0);
  signal["b_ac_ut"] = sig_field(&AcSignal::b_ac, 1e-6);
  signal["b_ac_nt"] = sig_field(&AcSignal::b_ac, 1e-9);
  signal["b_ac_t"] = sig_field(&AcSignal::b_ac, 1.0);
  signal["phase_rad"] = [](Config& c, const std::string& k,
                           const std::string& v) {
    if (c.signals.empty())
      throw ValidationError(k, "internal: no open [signal] section");
    c.signals.back().phase = parse_number(k, v);
  };

  auto& scan = s.sections["scan"];
  scan["tau_start_ns"] = num(1e-9, &Config::tau_start);
  scan["tau_start_s"] = num(1.0, &Config::tau_start);
  scan["tau_step_ps"] = num(1e-12, &Config::tau_step);
  scan["tau_step_ns"] = num(1e-9, &Config::tau_step);
  scan["tau_step_s"] = num(1.0, &Config::tau_step);
  scan["n_points"] = [](Config& c, const std::string& k,
                        const std::string& v) {
    c.n_points = parse_integer(k, v);
  };

  auto& wf = s.sections["waveform"];
  wf["sample_rate_msps"] = num(1e6, &Config::sample_rate);
  wf["sample_rate_hz"] = num(1.0, &Config::sample_rate);
  wf["vertical_bits"] = [](Config& c, const std::string& k,
                           const std::string& v) {
    c.vertical_bits = static_cast<int>(parse_integer(k, v));
  };
  wf["peak_amplitude"] = num(1.0, &Config::peak_amplitude);
  wf["carrier_mhz"] = [](Config& c, const std::string& k,
                         const std::string& v) {
    c.carrier = 1e6 * parse_number(k, v);
  };
  wf["carrier_hz"] = [](Config& c, const std::string& k,
                        const std::string& v) {
    c.carrier = parse_number(k, v);
  };
  wf["carrier_phase_rad"] = num(1.0, &Config::carrier_phase);
  wf["n_override"] = [](Config& c, const std::string& k,
                        const std::string& v) {
    c.n_override = parse_integer(k, v);
  };

  auto& out = s.sections["output"];
  out["dir"] = [](Config& c, const std::string&, const std::string& v) {
    c.out_dir = v;
  };
  out["format"] = [](Config& c, const std::string& k, const std::string& v) {
    if (v != "csv" && v != "binary")
      throw ValidationError(k, "format must be csv or binary");
    c.format = v;
  };
  out["plot"] = [](Config& c, const std::string& k, const std::string& v) {
    c.plot = parse_integer(k, v) != 0;
  };
  return s;
}

const Schema& schema() {
  static const Schema s = build_schema();
  return s;
}

}  // namespace

Config parse_config_ini(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config", "bad section header at line " +
                                            std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().sections.count(section))
        throw ValidationError(section, "unknown config section");
      if (section == "signal") c.signals.push_back({});
      if (section == "nucleus") c.nuclei.push_back({});
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config", "expected key = value at line " +
                                          std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ValidationError(key, "key outside of any [section]");
    const auto& keys = schema().sections.at(section);
    auto it = keys.find(key);
    if (it == keys.end())
      throw ValidationError(section + "." + key, "unknown config key");
    it->second(c, section + "." + key, value);
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON echo
// ---------------------------------------------------------------------------

json config_to_json(const Config& c) {
  json j;
  j["version"] = kVersion;
  j["sensor"] = {{"gamma_rad_per_s_t", c.gamma},
                 {"t2_s", c.t2 ? json(*c.t2) : json(nullptr)}};
  j["sequence"] = {{"n_pulses", c.n_pulses},
                   {"tau_s", c.tau},
                   {"t_pi_s", c.t_pi},
                   {"shape", to_string(c.shape)}};
  j["drive"] = {
      {"rabi_rad_per_s", c.rabi_peak ? json(*c.rabi_peak) : json(nullptr)},
      {"detuning_rad_per_s", c.detuning},
      {"substeps_per_sample", c.substeps_per_sample},
      {"phase_pattern", pattern_to_string(c.pattern)},
      {"quantize_bits",
       c.sim_quantize_bits ? json(*c.sim_quantize_bits) : json(nullptr)}};
  j["bath"] = {{"larmor_rad_per_s", c.larmor}};
  json nuclei = json::array();
  for (const auto& n : c.nuclei)
    nuclei.push_back({{"a_par_rad_per_s", n.a_par},
                      {"a_perp_rad_per_s", n.a_perp}});
  j["nuclei"] = nuclei;
  json signals = json::array();
  for (const auto& s : c.signals)
    signals.push_back({{"f_ac_hz", s.f_ac},
                       {"b_ac_t", s.b_ac},
                       {"phase_rad", s.phase ? json(*s.phase) : json(nullptr)}});
  j["signals"] = signals;
  j["scan"] = {{"tau_start_s", c.tau_start},
               {"tau_step_s", c.tau_step},
               {"n_points", c.n_points}};
  j["waveform"] = {
      {"sample_rate_hz", c.sample_rate},
      {"vertical_bits", c.vertical_bits},
      {"peak_amplitude", c.peak_amplitude},
      {"carrier_hz", c.carrier ? json(*c.carrier) : json(nullptr)},
      {"carrier_phase_rad", c.carrier_phase},
      {"n_override", c.n_override ? json(*c.n_override) : json(nullptr)}};
  j["output"] = {{"dir", c.out_dir}, {"format", c.format}, {"plot", c.plot}};
  return j;
}

namespace {

void require_known_keys(const json& j, const std::string& where,
                        std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ValidationError(where + "." + key, "unknown config key");
  }
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

Config config_from_json(const json& j) {
  Config c;
  require_known_keys(j, "config",
                     {"version", "sensor", "sequence", "drive", "bath",
                      "nuclei", "signals", "scan", "waveform", "output"});
  if (j.contains("sensor")) {
    const json& s = j["sensor"];
    require_known_keys(s, "sensor", {"gamma_rad_per_s_t", "t2_s"});
    if (s.contains("gamma_rad_per_s_t")) c.gamma = s["gamma_rad_per_s_t"];
    c.t2 = opt_from<double>(s, "t2_s");
  }
  if (j.contains("sequence")) {
    const json& s = j["sequence"];
    require_known_keys(s, "sequence", {"n_pulses", "tau_s", "t_pi_s", "shape"});
    if (s.contains("n_pulses")) c.n_pulses = s["n_pulses"];
    if (s.contains("tau_s")) c.tau = s["tau_s"];
    if (s.contains("t_pi_s")) c.t_pi = s["t_pi_s"];
    if (s.contains("shape"))
      c.shape = pulse_shape_from_string(s["shape"].get<std::string>());
  }
  if (j.contains("drive")) {
    const json& s = j["drive"];
    require_known_keys(s, "drive",
                       {"rabi_rad_per_s", "detuning_rad_per_s",
                        "substeps_per_sample", "phase_pattern",
                        "quantize_bits"});
    c.rabi_peak = opt_from<double>(s, "rabi_rad_per_s");
    if (s.contains("detuning_rad_per_s")) c.detuning = s["detuning_rad_per_s"];
    if (s.contains("substeps_per_sample"))
      c.substeps_per_sample = s["substeps_per_sample"];
    if (s.contains("phase_pattern"))
      c.pattern = pattern_from_string(s["phase_pattern"].get<std::string>());
    c.sim_quantize_bits = opt_from<int>(s, "quantize_bits");
  }
  if (j.contains("bath")) {
    const json& s = j["bath"];
    require_known_keys(s, "bath", {"larmor_rad_per_s"});
    if (s.contains("larmor_rad_per_s")) c.larmor = s["larmor_rad_per_s"];
  }
  if (j.contains("nuclei")) {
    for (const json& n : j["nuclei"]) {
      require_known_keys(n, "nuclei", {"a_par_rad_per_s", "a_perp_rad_per_s"});
      c.nuclei.push_back({n.value("a_par_rad_per_s", 0.0),
                          n.value("a_perp_rad_per_s", 0.0)});
    }
  }
  if (j.contains("signals")) {
    for (const json& s : j["signals"]) {
      require_known_keys(s, "signals", {"f_ac_hz", "b_ac_t", "phase_rad"});
      AcSignal sig{s.value("f_ac_hz", 0.0), s.value("b_ac_t", 0.0),
                   std::nullopt};
      sig.phase = opt_from<double>(s, "phase_rad");
      c.signals.push_back(sig);
    }
  }
  if (j.contains("scan")) {
    const json& s = j["scan"];
    require_known_keys(s, "scan", {"tau_start_s", "tau_step_s", "n_points"});
    if (s.contains("tau_start_s")) c.tau_start = s["tau_start_s"];
    if (s.contains("tau_step_s")) c.tau_step = s["tau_step_s"];
    if (s.contains("n_points")) c.n_points = s["n_points"];
  }
  if (j.contains("waveform")) {
    const json& s = j["waveform"];
    require_known_keys(s, "waveform",
                       {"sample_rate_hz", "vertical_bits", "peak_amplitude",
                        "carrier_hz", "carrier_phase_rad", "n_override"});
    if (s.contains("sample_rate_hz")) c.sample_rate = s["sample_rate_hz"];
    if (s.contains("vertical_bits")) c.vertical_bits = s["vertical_bits"];
    if (s.contains("peak_amplitude")) c.peak_amplitude = s["peak_amplitude"];
    c.carrier = opt_from<double>(s, "carrier_hz");
    if (s.contains("carrier_phase_rad"))
      c.carrier_phase = s["carrier_phase_rad"];
    c.n_override = opt_from<long long>(s, "n_override");
  }
  if (j.contains("output")) {
    const json& s = j["output"];
    require_known_keys(s, "output", {"dir", "format", "plot"});
    if (s.contains("dir")) c.out_dir = s["dir"];
    if (s.contains("format")) c.format = s["format"];
    if (s.contains("plot")) c.plot = s["plot"];
  }
  return c;
}

Config load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return config_from_json(json::parse(text));
  return parse_config_ini(text);
}

}  // namespace ddshaper
