#include "nvspec/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nvspec {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) {
  if (!(mw > 0.0)) throw std::domain_error("mw_to_dbm: power must be > 0");
  return 10.0 * std::log10(mw);
}

std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ValidationError(where + ": cannot parse number '" + t + "'");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ValidationError(where + ": cannot parse integer '" + t + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& where) {
  std::vector<double> out;
  for (const std::string& tok : split(text, ',')) {
    if (trim(tok).empty()) continue;
    out.push_back(parse_double(tok, where));
  }
  return out;
}

// Every key the config format understands, as "section.key". Key names carry
// their unit suffix; that is the unit tag this format enforces.
const std::vector<std::string>& schema_keys() {
  static const std::vector<std::string> keys = {
      "run.seed",
      "levels.omega_x_mhz", "levels.omega_y_mhz", "levels.omega_m_mhz",
      "drive.omega_d_mhz", "drive.power_mw", "drive.power_dbm",
      "drive.k_rabi_mhz_per_sqrt_mw", "drive.k_stark_x_mhz_per_sqrt_mw",
      "drive.k_stark_y_mhz_per_sqrt_mw", "drive.k_magnetic_mhz_per_sqrt_mw",
      "laser.omega_l_mhz", "laser.rabi_x_mhz", "laser.rabi_y_mhz",
      "lineshape.gamma_star_mhz", "lineshape.sigma_x_mhz", "lineshape.sigma_y_mhz",
      "ple.pl_ratio", "ple.n_max",
      "odmr.gamma_star_mhz", "odmr.inhom_width_mhz", "odmr.transitions",
      "scan.grid_min_mhz", "scan.grid_max_mhz", "scan.grid_step_mhz",
      "scan.powers_mw", "scan.omega_d_list_mhz",
      "oracle.dt_us", "oracle.t_transient_us", "oracle.t_average_us",
      "oracle.method", "oracle.drive_phase_deg",
      "fit.model", "fit.window_min_mhz", "fit.window_max_mhz", "fit.tracked_peaks",
      "estimate.splitting_mhz", "estimate.field_axial_kv_m",
      "estimate.field_transverse_kv_m", "estimate.tilt_deg", "estimate.n_samples",
      "estimate.rabi_m_mhz",
  };
  return keys;
}

bool in_schema(const std::string& key) {
  const auto& keys = schema_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::string suffix_hint(const std::string& key) {
  for (const std::string& known : schema_keys()) {
    if (known.size() > key.size() && known.compare(0, key.size(), key) == 0 &&
        known[key.size()] == '_') {
      return "; unit tag missing, expected '" + known + "'";
    }
  }
  return "";
}

std::vector<SidebandPeakId> parse_tracked_peaks(const std::string& text,
                                                const std::string& where) {
  std::vector<SidebandPeakId> out;
  for (const std::string& raw : split(text, ',')) {
    const std::string tok = trim(raw);
    if (tok.empty()) continue;
    const auto parts = split(tok, ':');
    if (parts.size() != 2 || (trim(parts[0]) != "+" && trim(parts[0]) != "-")) {
      throw ValidationError(where + ": tracked peak token '" + tok +
                            "' must look like '+:0' or '-:-2'");
    }
    SidebandPeakId id;
    id.branch = trim(parts[0]) == "+" ? +1 : -1;
    id.n = static_cast<int>(parse_int(parts[1], where));
    out.push_back(id);
  }
  return out;
}

std::vector<OdmrTransition> parse_transitions(const std::string& text,
                                              const std::string& where) {
  std::vector<OdmrTransition> out;
  for (const std::string& raw : split(text, ',')) {
    const std::string tok = trim(raw);
    if (tok.empty()) continue;
    const auto parts = split(tok, ':');
    if (parts.size() != 2) {
      throw ValidationError(where + ": transition token '" + tok +
                            "' must look like 'e1:-2400'");
    }
    out.push_back({trim(parts[0]), parse_double(parts[1], where)});
  }
  return out;
}

}  // namespace

RunConfig load_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string s = line;
    const std::size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    const std::size_t semi = s.find(';');
    if (semi != std::string::npos) s = s.substr(0, semi);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (section.empty()) throw ValidationError(where + ": key outside any [section]");
    const std::string full = section + "." + key;
    if (!in_schema(full)) {
      throw ValidationError(where + ": unknown key '" + full + "'" + suffix_hint(full));
    }
    if (kv.count(full)) throw ValidationError(where + ": duplicate key '" + full + "'");
    kv[full] = value;
  }

  RunConfig cfg;
  auto take = [&kv](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto dbl = [&](const char* key, double fallback) {
    const std::string* v = take(key);
    return v ? parse_double(*v, key) : fallback;
  };

  LevelDiagram levels;
  levels.omega_x = dbl("levels.omega_x_mhz", 0.0);
  levels.omega_y = dbl("levels.omega_y_mhz", 0.0);
  if (const std::string* v = take("levels.omega_m_mhz")) {
    levels.omega_m = parse_double(*v, "levels.omega_m_mhz");
  }

  DriveField drive;
  drive.omega_d = dbl("drive.omega_d_mhz", 0.0);
  const std::string* p_mw = take("drive.power_mw");
  const std::string* p_dbm = take("drive.power_dbm");
  if (p_mw && p_dbm) {
    throw ValidationError(origin + ": give drive.power_mw or drive.power_dbm, not both");
  }
  drive.power_mw = p_mw   ? parse_double(*p_mw, "drive.power_mw")
                   : p_dbm ? dbm_to_mw(parse_double(*p_dbm, "drive.power_dbm"))
                           : 0.0;
  drive.k_rabi = dbl("drive.k_rabi_mhz_per_sqrt_mw", 0.0);
  drive.k_stark_x = dbl("drive.k_stark_x_mhz_per_sqrt_mw", 0.0);
  drive.k_stark_y = dbl("drive.k_stark_y_mhz_per_sqrt_mw", 0.0);
  drive.k_magnetic = dbl("drive.k_magnetic_mhz_per_sqrt_mw", 0.0);

  LaserField laser;
  laser.omega_l = dbl("laser.omega_l_mhz", 0.0);
  laser.rabi_x = dbl("laser.rabi_x_mhz", 0.0);
  laser.rabi_y = dbl("laser.rabi_y_mhz", 0.0);

  LineshapeParams shape;
  shape.gamma_star = dbl("lineshape.gamma_star_mhz", 15.0);
  shape.sigma_x = dbl("lineshape.sigma_x_mhz", 0.0);
  shape.sigma_y = dbl("lineshape.sigma_y_mhz", 0.0);

  cfg.bundle = make_bundle(levels, drive, laser, shape);

  cfg.ple.pl_ratio = dbl("ple.pl_ratio", 1.6);
  if (const std::string* v = take("ple.n_max")) {
    cfg.ple.n_max = static_cast<int>(parse_int(*v, "ple.n_max"));
  }

  cfg.odmr.levels = levels;
  cfg.odmr.k_magnetic = drive.k_magnetic;
  cfg.odmr.gamma_star = dbl("odmr.gamma_star_mhz", 2.3);
  cfg.odmr.inhom_width = dbl("odmr.inhom_width_mhz", 48.0);
  if (const std::string* v = take("odmr.transitions")) {
    cfg.odmr.transitions = parse_transitions(*v, "odmr.transitions");
  }

  cfg.scan.grid_min = dbl("scan.grid_min_mhz", 0.0);
  cfg.scan.grid_max = dbl("scan.grid_max_mhz", 0.0);
  cfg.scan.grid_step = dbl("scan.grid_step_mhz", 0.0);
  if (const std::string* v = take("scan.powers_mw")) {
    cfg.scan.powers_mw = parse_list(*v, "scan.powers_mw");
  }
  if (const std::string* v = take("scan.omega_d_list_mhz")) {
    cfg.scan.omega_d_list = parse_list(*v, "scan.omega_d_list_mhz");
  }

  cfg.oracle.dt_us = dbl("oracle.dt_us", 0.0);
  cfg.oracle.t_transient_us = dbl("oracle.t_transient_us", 0.0);
  cfg.oracle.t_average_us = dbl("oracle.t_average_us", 0.0);
  if (const std::string* v = take("oracle.method")) cfg.oracle.method = trim(*v);
  cfg.oracle.drive_phase = dbl("oracle.drive_phase_deg", 0.0) * kPi / 180.0;

  if (const std::string* v = take("fit.model")) cfg.fit.model = trim(*v);
  cfg.fit.window_min = dbl("fit.window_min_mhz", 0.0);
  cfg.fit.window_max = dbl("fit.window_max_mhz", 0.0);
  if (const std::string* v = take("fit.tracked_peaks")) {
    cfg.fit.tracked_peaks = parse_tracked_peaks(*v, "fit.tracked_peaks");
  }

  cfg.estimate.splitting_mhz = dbl("estimate.splitting_mhz", 0.0);
  cfg.estimate.field_axial_kv_m = dbl("estimate.field_axial_kv_m", 0.0);
  cfg.estimate.field_transverse_kv_m = dbl("estimate.field_transverse_kv_m", 0.0);
  cfg.estimate.tilt_deg = dbl("estimate.tilt_deg", 25.0);
  if (const std::string* v = take("estimate.n_samples")) {
    cfg.estimate.n_samples = static_cast<int>(parse_int(*v, "estimate.n_samples"));
  }
  cfg.estimate.rabi_m_mhz = dbl("estimate.rabi_m_mhz", 0.0);

  if (const std::string* v = take("run.seed")) {
    cfg.seed = static_cast<std::uint64_t>(parse_int(*v, "run.seed"));
    cfg.seed_set = true;
  }

  // Canonical echo: everything that was set, with powers resolved to mW.
  cfg.echo = kv;
  if (p_dbm) {
    cfg.echo.erase("drive.power_dbm");
    cfg.echo["drive.power_mw"] = echo_num(drive.power_mw);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path);
}

namespace {

struct RawTable {
  std::string col0, col1;
  Eigen::ArrayXd a, b;
  std::map<std::string, std::string> echo;
};

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  if (line.find(',') != std::string::npos) {
    for (const std::string& c : split(line, ',')) cells.push_back(trim(c));
  } else {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) cells.push_back(tok);
  }
  return cells;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

RawTable load_raw_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_table: cannot open " + path);
  RawTable table;
  std::string line;
  bool header_seen = false;
  std::vector<double> a, b;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const std::string body = trim(s.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string::npos) {
        table.echo[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    const std::vector<std::string> cells = split_row(s);
    if (cells.size() != 2) {
      throw ValidationError(where + ": expected exactly two columns");
    }
    if (!header_seen) {
      table.col0 = lower(cells[0]);
      table.col1 = lower(cells[1]);
      header_seen = true;
      continue;
    }
    const double x = parse_double(cells[0], where);
    const double y = parse_double(cells[1], where);
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw ValidationError(where + ": non-finite cell");
    }
    if (!a.empty() && !(x > a.back())) {
      throw ValidationError(where + ": first column must be strictly increasing");
    }
    a.push_back(x);
    b.push_back(y);
  }
  if (!header_seen) throw ValidationError(path + ": missing header row");
  if (a.empty()) throw ValidationError(path + ": no data rows");
  if (table.col0.find("mhz") == std::string::npos) {
    throw ValidationError(path + ": first column header must carry an mhz unit tag");
  }
  table.a = Eigen::Map<Eigen::ArrayXd>(a.data(), a.size());
  table.b = Eigen::Map<Eigen::ArrayXd>(b.data(), b.size());
  return table;
}

}  // namespace

AntennaResponse load_antenna_table(const std::string& path) {
  const RawTable raw = load_raw_table(path);
  if (raw.col1.find("dbm") == std::string::npos) {
    throw ValidationError(path + ": second column header must carry a dbm unit tag");
  }
  AntennaResponse resp;
  resp.frequency = raw.a;
  resp.power_dbm = raw.b;
  resp.validate();
  return resp;
}

Spectrum load_spectrum_table(const std::string& path) {
  const RawTable raw = load_raw_table(path);
  if (raw.col1.find("dbm") != std::string::npos) {
    throw ValidationError(path + ": this looks like an antenna response, not a spectrum");
  }
  Spectrum sp;
  sp.axis = raw.a;
  sp.intensity = raw.b;
  sp.params_echo = raw.echo;
  sp.kind = raw.echo.count("spectrum.kind") && raw.echo.at("spectrum.kind") == "odmr"
                ? SpectrumKind::ODMR
                : SpectrumKind::PLE;
  return sp;
}

namespace {

// Shared multi-column reader: '#' echo lines, one header row, numeric rows.
std::vector<std::vector<std::string>> load_rows(const std::string& path,
                                                std::size_t columns,
                                                std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_table: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::vector<std::string> cells = split_row(s);
    if (cells.size() != columns) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(columns) + " columns");
    }
    if (!header_seen) {
      if (header) *header = cells;
      header_seen = true;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  if (!header_seen) throw ValidationError(path + ": missing header row");
  if (rows.empty()) throw ValidationError(path + ": no data rows");
  return rows;
}

}  // namespace

std::vector<std::pair<double, double>> load_power_splitting_table(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = load_rows(path, 2, &header);
  if (lower(header[0]).find("mw") == std::string::npos ||
      lower(header[1]).find("mhz") == std::string::npos) {
    throw ValidationError(path + ": expected power_mw and splitting_mhz columns");
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& row : rows) {
    out.push_back({parse_double(row[0], path), parse_double(row[1], path)});
  }
  return out;
}

std::vector<SidebandDataPoint> load_sideband_table(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = load_rows(path, 4, &header);
  if (lower(header[0]).find("branch") == std::string::npos ||
      lower(header[2]).find("mw") == std::string::npos) {
    throw ValidationError(path + ": expected branch,n,power_mw,amplitude columns");
  }
  std::vector<SidebandDataPoint> out;
  for (const auto& row : rows) {
    SidebandDataPoint d;
    const std::string b = trim(row[0]);
    if (b != "+" && b != "-") {
      throw ValidationError(path + ": branch column must be + or -");
    }
    d.peak.branch = b == "+" ? +1 : -1;
    d.peak.n = static_cast<int>(parse_int(row[1], path));
    d.power_mw = parse_double(row[2], path);
    d.amplitude = parse_double(row[3], path);
    out.push_back(d);
  }
  return out;
}

std::vector<std::pair<std::string, DipoleVector>> load_dipole_table(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = load_rows(path, 4, &header);
  if (lower(header[1]).find("debye") == std::string::npos) {
    throw ValidationError(path + ": expected label,x_debye,y_debye,z_debye columns");
  }
  std::vector<std::pair<std::string, DipoleVector>> out;
  for (const auto& row : rows) {
    out.push_back({trim(row[0]),
                   DipoleVector(parse_double(row[1], path), parse_double(row[2], path),
                                parse_double(row[3], path))});
  }
  return out;
}

Eigen::ArrayXd make_grid(const ScanConfig& scan) {
  if (!(scan.grid_step > 0.0)) throw ValidationError("scan.grid_step_mhz must be > 0");
  if (!(scan.grid_max > scan.grid_min)) {
    throw ValidationError("scan.grid_max_mhz must exceed scan.grid_min_mhz");
  }
  const auto n =
      static_cast<Eigen::Index>(std::floor((scan.grid_max - scan.grid_min) / scan.grid_step + 1e-9)) + 1;
  Eigen::ArrayXd grid(n);
  for (Eigen::Index i = 0; i < n; ++i) grid[i] = scan.grid_min + i * scan.grid_step;
  return grid;
}

PeakModel peak_model_from_name(const std::string& name) {
  const std::string n = lower(trim(name));
  if (n == "gaussian") return PeakModel::Gaussian;
  if (n == "lorentzian") return PeakModel::Lorentzian;
  if (n == "voigt") return PeakModel::Voigt;
  throw ValidationError("fit.model must be gaussian, lorentzian or voigt, not '" + name + "'");
}

namespace {

std::ofstream open_output(const std::string& path, bool force) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (fs::exists(p) && !force) {
    throw ValidationError("output exists: " + path + " (pass --force to overwrite)");
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

void write_echo_header(std::ofstream& out, const std::map<std::string, std::string>& echo) {
  for (const auto& [key, value] : echo) {
    out << "# " << key << "=" << value << "\n";
  }
}

}  // namespace

void write_spectrum_csv(const std::string& path, const Spectrum& spectrum, bool force) {
  std::ofstream out = open_output(path, force);
  write_echo_header(out, spectrum.params_echo);
  out << "frequency_mhz,intensity\n";
  for (Eigen::Index i = 0; i < spectrum.axis.size(); ++i) {
    out << format_sig9(spectrum.axis[i]) << "," << format_sig9(spectrum.intensity[i]) << "\n";
  }
}

void write_report_csv(const std::string& path,
                      const std::map<std::string, std::string>& echo,
                      const std::vector<std::pair<std::string, std::string>>& rows,
                      bool force) {
  std::ofstream out = open_output(path, force);
  write_echo_header(out, echo);
  out << "key,value\n";
  for (const auto& [key, value] : rows) out << key << "," << value << "\n";
}

void write_sidecar(const std::string& path, const std::map<std::string, std::string>& echo,
                   bool force) {
  std::ofstream out = open_output(path, force);
  // Non-config keys (derived results, sweep bookkeeping) become comments so
  // the sidecar stays loadable as a config.
  for (const auto& [key, value] : echo) {
    if (!in_schema(key)) out << "# derived " << key << "=" << value << "\n";
  }
  std::string section;
  for (const auto& [key, value] : echo) {
    if (!in_schema(key)) continue;
    const std::size_t dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << value << "\n";
  }
}

}  // namespace nvspec
