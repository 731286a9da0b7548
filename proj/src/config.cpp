#include "cavsync/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cavsync/errors.hpp"

namespace cavsync {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += shortest(v[i]);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

class Document {
 public:
  Document(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = raw;
      if (auto c = s.find_first_of("#;"); c != std::string::npos) s.erase(c);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(line, "section header", "missing ']'");
        section = trim(std::string_view(s).substr(1, s.size() - 2));
        if (!known_section(section)) fail(line, section, "unknown section");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail(line, s, "expected key = value");
      if (section.empty()) fail(line, s, "key outside of a section");
      const std::string key = section + "." + trim(std::string_view(s).substr(0, eq));
      const std::string value = trim(std::string_view(s).substr(eq + 1));
      if (!known_key(key)) fail(line, key, "unknown key");
      if (value.empty()) fail(line, key, "empty value");
      if (!entries_.emplace(key, Entry{value, line}).second) fail(line, key, "duplicate key");
    }
  }

  [[noreturn]] void fail(int line, const std::string& field, const std::string& what) const {
    std::string where = source_;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": " + field + ": " + what);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = entries_.find(key);
    fail(it == entries_.end() ? 0 : it->second.line, key, what);
  }

  const Entry* get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  double number(const std::string& key, const std::string& text, int line) const {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(line, key, "not a number: '" + text + "'");
    if (!std::isfinite(v)) fail(line, key, "non-finite value");
    return v;
  }

  std::optional<double> scalar(const std::string& key) {
    const Entry* e = get(key);
    if (!e) return std::nullopt;
    return number(key, e->value, e->line);
  }

  double required(const std::string& key) {
    auto v = scalar(key);
    if (!v) fail(0, key, "missing");
    return *v;
  }

  std::optional<std::vector<double>> list(const std::string& key) {
    const Entry* e = get(key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    std::string item;
    std::istringstream in(e->value);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(e->line, key, "empty list item");
      out.push_back(number(key, item, e->line));
    }
    return out;
  }

  std::optional<std::string> text(const std::string& key) {
    const Entry* e = get(key);
    return e ? std::optional(e->value) : std::nullopt;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const Entry* e = get(key);
    if (!e) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || ptr != e->value.data() + e->value.size()) fail(e->line, key, "not an integer");
    return v;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) fail(e.line, key, "unknown key");
    }
  }

 private:
  static bool known_key(const std::string& k) {
    static const char* const keys[] = {
        "cavity.omega_c",   "cavity.kappa",       "drive.omega_d",     "drive.Omega0",      "drive.Delta",
        "qubits.n",         "qubits.g",           "qubits.omega_q",    "qubits.gamma",      "qubits.gamma_loss",
        "qubits.gamma_phi", "qubits.compensate",  "pulse.kind",        "pulse.T",           "pulse.tau_r",
        "pulse.t_final_gamma", "run.seed",        "run.threads"};
    for (const char* key : keys) {
      if (k == key) return true;
    }
    return false;
  }
  static bool known_section(const std::string& s) {
    return s == "cavity" || s == "drive" || s == "qubits" || s == "pulse" || s == "run";
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

std::vector<double> broadcast(Document& doc, const std::string& key, std::vector<double> v, int n) {
  if (v.size() == 1) v.assign(static_cast<std::size_t>(n), v.front());
  if (v.size() != static_cast<std::size_t>(n)) {
    doc.fail(key, "expected 1 or " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  }
  return v;
}

std::vector<double> scaled(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = kTwoPi * v[i];
  return out;
}

}  // namespace

PhysicalParams RunConfig::params() const {
  PhysicalParams p;
  p.n_qubits = n;
  p.omega_c = kTwoPi * omega_c;
  p.kappa = kTwoPi * kappa;
  p.omega_d = kTwoPi * omega_d;
  p.Omega0 = kTwoPi * Omega0;
  p.g = scaled(g);
  p.gamma = scaled(gamma);
  p.gamma_loss = scaled(gamma_loss);
  p.gamma_phi = scaled(gamma_phi);
  p.compensate = compensate;
  if (omega_q.empty()) {
    PhysicalParams q = p;
    q.omega_q.assign(static_cast<std::size_t>(n), p.omega_d);
    const DerivedParams d = derive(q);
    p.omega_q.resize(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < p.omega_q.size(); ++j) p.omega_q[j] = p.omega_d - d.delta_cm[j];
  } else {
    p.omega_q = scaled(omega_q);
  }
  p.validate();
  return p;
}

PulseShape RunConfig::pulse(const PhysicalParams& p) const {
  if (pulse_kind == PulseKind::Square) {
    if (T) return PulseShape::square(*T);
    const double T_pi = derive(p).T_pi;
    return PulseShape::square(std::isfinite(T_pi) ? T_pi : 0.0);  // undriven: no pulse at all
  }
  if (!(tau_r > 0.0)) throw ConfigError("pulse.tau_r: must be positive for a smooth pulse");
  return T ? PulseShape::smooth(*T, tau_r) : optimize_smooth_pulse(p, tau_r);
}

double RunConfig::t_final(const PhysicalParams& p) const {
  double slowest = p.gamma.at(0);
  for (double x : p.gamma) slowest = std::min(slowest, x);
  return t_final_gamma / slowest;
}

std::string RunConfig::echo() const {
  std::ostringstream o;
  o << "[cavity]\nomega_c = " << shortest(omega_c) << "\nkappa = " << shortest(kappa) << "\n\n";
  o << "[drive]\nomega_d = " << shortest(omega_d) << "\nOmega0 = " << shortest(Omega0) << "\n\n";
  o << "[qubits]\nn = " << n << "\ng = " << join(g) << "\nomega_q = " << (omega_q.empty() ? "auto" : join(omega_q))
    << "\ngamma = " << join(gamma) << "\ngamma_loss = " << join(gamma_loss) << "\ngamma_phi = " << join(gamma_phi)
    << "\ncompensate = " << (compensate ? "true" : "false") << "\n\n";
  o << "[pulse]\nkind = " << (pulse_kind == PulseKind::Square ? "square" : "smooth")
    << "\nT = " << (T ? shortest(*T) : "auto") << "\ntau_r = " << shortest(tau_r)
    << "\nt_final_gamma = " << shortest(t_final_gamma) << "\n";
  if (seed || threads) {
    o << "\n[run]\n";
    if (seed) o << "seed = " << *seed << "\n";
    if (threads) o << "threads = " << *threads << "\n";
  }
  return o.str();
}

RunConfig RunConfig::with_qubits(int count) const {
  if (count < 1) throw ConfigError("qubits.n: must be at least 1");
  RunConfig out = *this;
  out.n = count;
  for (auto* v : {&out.g, &out.omega_q, &out.gamma, &out.gamma_loss, &out.gamma_phi}) {
    if (!v->empty()) v->assign(static_cast<std::size_t>(count), v->front());
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  Document doc(text, source);
  RunConfig c;
  c.kappa = doc.required("cavity.kappa");
  c.omega_d = doc.required("drive.omega_d");
  c.Omega0 = doc.required("drive.Omega0");
  const auto omega_c = doc.scalar("cavity.omega_c");
  const auto Delta = doc.scalar("drive.Delta");
  if (omega_c && Delta) doc.fail("drive.Delta", "give either cavity.omega_c or drive.Delta, not both");
  if (!omega_c && !Delta) doc.fail(0, "cavity.omega_c", "missing (or set drive.Delta)");
  c.omega_c = omega_c ? *omega_c : c.omega_d - *Delta;
  if (c.kappa < 0.0) doc.fail("cavity.kappa", "must be non-negative");
  if (c.Omega0 < 0.0) doc.fail("drive.Omega0", "must be non-negative");

  const auto n = doc.integer("qubits.n");
  if (!n) doc.fail(0, "qubits.n", "missing");
  if (*n < 1 || *n > 64) doc.fail("qubits.n", "must be between 1 and 64");
  c.n = static_cast<int>(*n);

  auto g = doc.list("qubits.g");
  if (!g) doc.fail(0, "qubits.g", "missing");
  c.g = broadcast(doc, "qubits.g", *g, c.n);
  auto gamma = doc.list("qubits.gamma");
  if (!gamma) doc.fail(0, "qubits.gamma", "missing");
  c.gamma = broadcast(doc, "qubits.gamma", *gamma, c.n);
  c.gamma_loss = broadcast(doc, "qubits.gamma_loss", doc.list("qubits.gamma_loss").value_or(std::vector{0.0}), c.n);
  c.gamma_phi = broadcast(doc, "qubits.gamma_phi", doc.list("qubits.gamma_phi").value_or(std::vector{0.0}), c.n);
  if (auto wq = doc.text("qubits.omega_q"); wq && *wq != "auto") {
    c.omega_q = broadcast(doc, "qubits.omega_q", *doc.list("qubits.omega_q"), c.n);
  }
  for (double x : c.gamma) {
    if (!(x > 0.0)) doc.fail("qubits.gamma", "must be positive");
  }
  for (double x : c.g) {
    if (x < 0.0) doc.fail("qubits.g", "must be non-negative");
  }
  for (double x : c.gamma_loss) {
    if (x < 0.0) doc.fail("qubits.gamma_loss", "must be non-negative");
  }
  for (double x : c.gamma_phi) {
    if (x < 0.0) doc.fail("qubits.gamma_phi", "must be non-negative");
  }
  if (auto comp = doc.text("qubits.compensate")) {
    if (*comp == "true") c.compensate = true;
    else if (*comp == "false") c.compensate = false;
    else doc.fail("qubits.compensate", "expected true or false");
  }

  if (auto kind = doc.text("pulse.kind")) {
    if (*kind == "square") c.pulse_kind = PulseKind::Square;
    else if (*kind == "smooth") c.pulse_kind = PulseKind::SmoothTanh;
    else doc.fail("pulse.kind", "expected square or smooth");
  }
  if (auto T = doc.text("pulse.T"); T && *T != "auto") {
    c.T = doc.scalar("pulse.T");
    if (!(*c.T > 0.0)) doc.fail("pulse.T", "must be positive");
  }
  c.tau_r = doc.scalar("pulse.tau_r").value_or(0.0);
  if (c.tau_r < 0.0) doc.fail("pulse.tau_r", "must be non-negative");
  if (c.pulse_kind == PulseKind::SmoothTanh && c.tau_r == 0.0) doc.fail("pulse.tau_r", "required for a smooth pulse");
  c.t_final_gamma = doc.scalar("pulse.t_final_gamma").value_or(15.0);
  if (!(c.t_final_gamma > 0.0)) doc.fail("pulse.t_final_gamma", "must be positive");

  if (auto s = doc.integer("run.seed")) {
    if (*s < 0) doc.fail("run.seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(*s);
  }
  if (auto t = doc.integer("run.threads")) {
    if (*t < 1) doc.fail("run.threads", "must be at least 1");
    c.threads = static_cast<int>(*t);
  }
  doc.reject_unused();
  try {
    (void)c.params();
  } catch (const ConfigError& e) {
    doc.fail(0, "qubits", e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

RunConfig preset_config(char name, int n_qubits) {
  double gam = 0, loss = 0, phi = 0;
  switch (name) {
    case 'A': gam = 0.4; break;
    case 'B': gam = 0.4; loss = 0.001; phi = 0.001; break;
    case 'C': gam = 1.0; loss = 0.005; phi = 0.01; break;
    case 'D': gam = 3.0; loss = 0.05; phi = 0.1; break;
    default: throw ConfigError(std::string("preset: unknown name '") + name + "'");
  }
  if (n_qubits < 1) throw ConfigError("qubits.n: must be at least 1");
  RunConfig c;
  c.omega_d = 6000.0;
  c.omega_c = 5950.0;
  c.kappa = 400.0;
  c.Omega0 = 40000.0;
  c.n = n_qubits;
  const auto n = static_cast<std::size_t>(n_qubits);
  c.g.assign(n, 0.2);
  c.gamma.assign(n, gam);
  c.gamma_loss.assign(n, loss);
  c.gamma_phi.assign(n, phi);
  return c;
}

}  // namespace cavsync
