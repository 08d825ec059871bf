#include "djds/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "djds/kernels.hpp"

namespace djds {

double LinearDjdsModel::min_positive_delay() const {
  double d = 0;
  for (double t : {tau1, tau2, tau3})
    if (t > 0 && (d == 0 || t < d)) d = t;
  return d;
}

void LinearDjdsModel::validate() const {
  auto square = [&](const Matrix& m, const char* name) {
    if (m.rows != n || m.cols != n)
      throw std::invalid_argument(std::string(name) + ": expected " +
                                  std::to_string(n) + "x" + std::to_string(n));
  };
  square(A1, "A1");
  square(A2, "A2");
  if (B.rows != n || B.cols != m) throw std::invalid_argument("B: bad shape");
  if (G.size() != Gbar.size()) throw std::invalid_argument("G/Gbar count mismatch");
  if (R.size() != Rbar.size() || R.size() != lambda.size())
    throw std::invalid_argument("R/Rbar/lambda count mismatch");
  for (const auto& g : G) square(g, "G");
  for (const auto& g : Gbar) square(g, "Gbar");
  for (const auto& r : R) square(r, "R");
  for (const auto& r : Rbar) square(r, "Rbar");
  for (double l : lambda)
    if (l < 0) throw std::invalid_argument("lambda must be nonnegative");
  if (tau1 < 0 || tau2 < 0 || tau3 < 0)
    throw std::invalid_argument("delays must be nonnegative");
}

static void fnv_feed(std::uint64_t& h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

static void fnv_feed_d(std::uint64_t& h, double v) {
  char buf[32];
  int k = std::snprintf(buf, sizeof buf, "%.17g;", v);
  fnv_feed(h, buf, std::size_t(k));
}

std::uint64_t LinearDjdsModel::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_feed_d(h, double(n));
  fnv_feed_d(h, double(m));
  fnv_feed_d(h, tau1);
  fnv_feed_d(h, tau2);
  fnv_feed_d(h, tau3);
  auto feed_m = [&](const Matrix& mat) {
    for (double v : mat.a) fnv_feed_d(h, v);
  };
  feed_m(A1);
  feed_m(A2);
  feed_m(B);
  for (const auto& g : G) feed_m(g);
  for (const auto& g : Gbar) feed_m(g);
  for (const auto& r : R) feed_m(r);
  for (const auto& r : Rbar) feed_m(r);
  for (double l : lambda) fnv_feed_d(h, l);
  return h;
}

double InputSpace::span() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& b : boxes)
    for (std::size_t i = 0; i < b.lo.size(); ++i) s = std::min(s, b.hi[i] - b.lo[i]);
  return s;
}

double QuantizedInputSet::sup_norm() const {
  double s = 0;
  for (const auto& p : points)
    s = std::max(s, std::sqrt(kernels::dot(p.data(), p.data(), p.size())));
  return s;
}

HistorySegment HistorySegment::constant(const Vec& x, double tau, double dt) {
  HistorySegment seg;
  seg.n = x.size();
  seg.grid_step = dt;
  std::size_t samples = tau <= 0 ? 1 : std::size_t(std::llround(tau / dt)) + 1;
  seg.values.resize(samples * seg.n);
  for (std::size_t j = 0; j < samples; ++j)
    std::copy(x.begin(), x.end(), seg.values.begin() + j * seg.n);
  return seg;
}

Vec HistorySegment::eval(double theta) const {
  double tau_ = tau();
  double pos = (theta + tau_) / (samples() > 1 ? grid_step : 1.0);
  if (pos <= 0) return Vec(node(0), node(0) + n);
  std::size_t last = samples() - 1;
  if (pos >= double(last)) return Vec(node(last), node(last) + n);
  std::size_t j = std::size_t(pos);
  double w = pos - double(j);
  Vec r(n);
  const double* a = node(j);
  const double* b = node(j + 1);
  for (std::size_t i = 0; i < n; ++i) r[i] = (1.0 - w) * a[i] + w * b[i];
  return r;
}

double HistorySegment::sup_norm() const {
  double s = 0;
  for (std::size_t j = 0; j < samples(); ++j)
    s = std::max(s, kernels::dot(node(j), node(j), n));
  return std::sqrt(s);
}

HistorySegment HistorySegment::resampled(double new_dt) const {
  HistorySegment seg;
  seg.n = n;
  seg.grid_step = new_dt;
  double tau_ = tau();
  std::size_t samples_ = tau_ <= 0 ? 1 : std::size_t(std::llround(tau_ / new_dt)) + 1;
  seg.values.resize(samples_ * n);
  for (std::size_t j = 0; j < samples_; ++j) {
    Vec v = eval(-tau_ + double(j) * new_dt);
    std::copy(v.begin(), v.end(), seg.values.begin() + j * n);
  }
  return seg;
}

double OperatingRegion::diameter() const {
  double s = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    double d = hi[i] - lo[i];
    s += d * d;
  }
  return std::sqrt(s);
}

QuantizedInputSet quantize(const InputSpace& space, double eta) {
  QuantizedInputSet q;
  if (space.is_explicit()) {
    q.eta = 0.0;  // finite set is exact, no quantization error
    q.points = space.explicit_points;
    if (q.points.empty()) throw std::runtime_error("EmptyInputSet");
    return q;
  }
  if (space.boxes.empty()) throw std::runtime_error("EmptyInputSet");
  if (eta <= 0) throw std::runtime_error("eta must be positive");
  if (eta > space.span()) throw std::runtime_error("EtaExceedsSpan");
  q.eta = eta;
  std::size_t m = space.boxes.front().lo.size();
  double step = eta / std::sqrt(double(m));
  std::vector<Vec> pts;
  for (const auto& b : space.boxes) {
    std::vector<long> klo(m), khi(m);
    for (std::size_t i = 0; i < m; ++i) {
      klo[i] = (long)std::ceil(b.lo[i] / step - 1e-12);
      khi[i] = (long)std::floor(b.hi[i] / step + 1e-12);
      if (klo[i] > khi[i]) { klo[i] = 1; khi[i] = 0; }
    }
    std::vector<long> k = klo;
    bool done = false;
    for (std::size_t i = 0; i < m; ++i)
      if (klo[i] > khi[i]) done = true;
    while (!done) {
      Vec p(m);
      for (std::size_t i = 0; i < m; ++i) p[i] = double(k[i]) * step;
      pts.push_back(std::move(p));
      std::size_t i = m;
      while (i-- > 0) {
        if (++k[i] <= khi[i]) break;
        k[i] = klo[i];
        if (i == 0) done = true;
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) throw std::runtime_error("EmptyInputSet");
  q.points = std::move(pts);
  return q;
}

LipschitzConstants lipschitz_constants(const LinearDjdsModel& model) {
  LipschitzConstants c{};
  c.Lf = spectral_norm(model.A1) + spectral_norm(model.A2);
  c.Lu = model.B.empty() ? 0.0 : spectral_norm(model.B);
  c.Lg = 0;
  for (std::size_t i = 0; i < model.G.size(); ++i)
    c.Lg += spectral_norm(model.G[i]) + spectral_norm(model.Gbar[i]);
  c.Lr = 0;
  for (std::size_t i = 0; i < model.R.size(); ++i)
    c.Lr += spectral_norm(model.R[i]) + spectral_norm(model.Rbar[i]);
  return c;
}

double sup_distance(const HistorySegment& a, const HistorySegment& b) {
  if (a.n != b.n) throw std::invalid_argument("sup_distance: dimension mismatch");
  if (std::fabs(a.tau() - b.tau()) > 1e-9 * std::max(1.0, a.tau()))
    throw std::invalid_argument("TauMismatch");
  double tau = a.tau();
  // exact for piecewise-linear segments: the max over the union of both grids
  std::vector<double> nodes;
  nodes.reserve(a.samples() + b.samples());
  for (std::size_t j = 0; j < a.samples(); ++j) nodes.push_back(-tau + double(j) * a.grid_step);
  for (std::size_t j = 0; j < b.samples(); ++j) nodes.push_back(-tau + double(j) * b.grid_step);
  std::sort(nodes.begin(), nodes.end());
  double best = 0;
  for (double t : nodes) {
    Vec va = a.eval(t), vb = b.eval(t);
    best = std::max(best, kernels::sqdist(va.data(), vb.data(), va.size()));
  }
  return std::sqrt(best);
}

// ---- model file parsing ----

namespace {

struct Node {  // nested numeric list
  bool is_list = false;
  double num = 0;
  std::vector<Node> items;
};

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  void skip_ws() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
  }
};

Node parse_node(Cursor& c) {
  c.skip_ws();
  if (c.i >= c.s.size()) throw std::runtime_error("unexpected end of value");
  if (c.s[c.i] == '[') {
    ++c.i;
    Node n;
    n.is_list = true;
    c.skip_ws();
    if (c.i < c.s.size() && c.s[c.i] == ']') { ++c.i; return n; }
    while (true) {
      n.items.push_back(parse_node(c));
      c.skip_ws();
      if (c.i < c.s.size() && c.s[c.i] == ',') { ++c.i; continue; }
      if (c.i < c.s.size() && c.s[c.i] == ']') { ++c.i; break; }
      throw std::runtime_error("expected ',' or ']' in list");
    }
    return n;
  }
  std::size_t start = c.i;
  while (c.i < c.s.size() && (std::isdigit((unsigned char)c.s[c.i]) ||
         strchr("+-.eE", c.s[c.i])))
    ++c.i;
  if (c.i == start) throw std::runtime_error("expected number");
  Node n;
  n.num = std::stod(c.s.substr(start, c.i - start));
  return n;
}

Vec flat(const Node& n) {
  Vec v;
  if (!n.is_list) { v.push_back(n.num); return v; }
  for (const auto& it : n.items) {
    Vec sub = flat(it);
    v.insert(v.end(), sub.begin(), sub.end());
  }
  return v;
}

Matrix to_matrix(const Node& n, std::size_t rows, std::size_t cols, const std::string& key) {
  Vec v = flat(n);
  if (v.size() != rows * cols)
    throw std::runtime_error(key + ": expected " + std::to_string(rows * cols) +
                             " entries, got " + std::to_string(v.size()));
  Matrix m(rows, cols);
  m.a = std::move(v);
  return m;
}

} // namespace

ModelFile parse_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);

  // key -> raw value text, grouped by section; repeated keys collected in order
  std::map<std::string, std::vector<std::string>> kv;
  std::string section, line, pending_key, pending_val;
  int depth = 0;
  auto flush = [&]() {
    if (!pending_key.empty()) {
      kv[section + "." + pending_key].push_back(pending_val);
      pending_key.clear();
      pending_val.clear();
    }
  };
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::string trimmed = line;
    auto b = trimmed.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = trimmed.find_last_not_of(" \t\r");
    trimmed = trimmed.substr(b, e - b + 1);
    if (depth == 0 && trimmed.front() == '[' && trimmed.back() == ']' &&
        trimmed.find('=') == std::string::npos && trimmed.find(',') == std::string::npos) {
      flush();
      section = trimmed.substr(1, trimmed.size() - 2);
      continue;
    }
    if (depth == 0) {
      auto eq = trimmed.find('=');
      if (eq == std::string::npos) throw std::runtime_error("expected key = value: " + trimmed);
      flush();
      pending_key = trimmed.substr(0, eq);
      pending_key.erase(pending_key.find_last_not_of(" \t") + 1);
      pending_val = trimmed.substr(eq + 1);
    } else {
      pending_val += " " + trimmed;
    }
    depth = 0;
    for (char ch : pending_val) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
    }
  }
  flush();

  auto parse_val = [](const std::string& raw) {
    Cursor c{raw};
    Node n = parse_node(c);
    c.skip_ws();
    if (c.i != raw.size()) throw std::runtime_error("trailing characters in value: " + raw);
    return n;
  };
  auto get1 = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing key: " + key);
    if (it->second.size() != 1) throw std::runtime_error("duplicate key: " + key);
    return it->second.front();
  };
  auto num = [&](const std::string& key) {
    Node n = parse_val(get1(key));
    if (n.is_list) throw std::runtime_error(key + ": expected scalar");
    return n.num;
  };

  ModelFile mf;
  LinearDjdsModel& md = mf.model;
  md.n = std::size_t(num("model.n"));
  md.m = std::size_t(num("model.m"));
  md.tau1 = num("model.tau1");
  md.tau2 = num("model.tau2");
  md.tau3 = num("model.tau3");
  md.A1 = to_matrix(parse_val(get1("model.A1")), md.n, md.n, "A1");
  md.A2 = to_matrix(parse_val(get1("model.A2")), md.n, md.n, "A2");
  md.B = to_matrix(parse_val(get1("model.B")), md.n, md.m, "B");

  std::map<std::string, bool> consumed;
  for (const char* k : {"model.n", "model.m", "model.tau1", "model.tau2",
                        "model.tau3", "model.A1", "model.A2", "model.B"})
    consumed[k] = true;

  auto family = [&](const std::string& prefix, std::vector<Matrix>& out) {
    for (std::size_t i = 1;; ++i) {
      std::string key = "model." + prefix + std::to_string(i);
      if (!kv.count(key)) break;
      out.push_back(to_matrix(parse_val(get1(key)), md.n, md.n, key));
      consumed[key] = true;
    }
  };
  family("G", md.G);
  family("Gbar", md.Gbar);
  family("R", md.R);
  family("Rbar", md.Rbar);
  if (kv.count("model.lambda")) {
    md.lambda = flat(parse_val(get1("model.lambda")));
    consumed["model.lambda"] = true;
  }
  md.validate();

  if (kv.count("input.points")) {
    Node n = parse_val(get1("input.points"));
    if (!n.is_list) throw std::runtime_error("input.points: expected list of points");
    for (const auto& p : n.items) {
      Vec v = flat(p);
      if (v.size() != md.m) throw std::runtime_error("input point has wrong dimension");
      mf.input.explicit_points.push_back(std::move(v));
    }
    consumed["input.points"] = true;
  }
  if (kv.count("input.box")) {
    for (const auto& raw : kv.at("input.box")) {
      Vec v = flat(parse_val(raw));
      if (v.size() != 2 * md.m)
        throw std::runtime_error("input.box: expected lo,hi per coordinate");
      Box b;
      for (std::size_t i = 0; i < md.m; ++i) {
        b.lo.push_back(v[2 * i]);
        b.hi.push_back(v[2 * i + 1]);
        if (!(b.lo[i] < b.hi[i])) throw std::runtime_error("input.box: lo must be < hi");
      }
      mf.input.boxes.push_back(std::move(b));
    }
    consumed["input.box"] = true;
  }
  if (mf.input.is_explicit() == !mf.input.boxes.empty())
    throw std::runtime_error("input: exactly one of points / box required");

  if (kv.count("region.lo") || kv.count("region.hi")) {
    OperatingRegion r;
    r.lo = flat(parse_val(get1("region.lo")));
    r.hi = flat(parse_val(get1("region.hi")));
    consumed["region.lo"] = consumed["region.hi"] = true;
    if (r.lo.size() != md.n || r.hi.size() != md.n)
      throw std::runtime_error("region: expected n entries in lo and hi");
    for (std::size_t i = 0; i < md.n; ++i)
      if (!(r.lo[i] < r.hi[i])) throw std::runtime_error("region: lo must be < hi");
    mf.region = std::move(r);
  }

  for (const auto& [key, vals] : kv)
    if (!consumed.count(key)) throw std::runtime_error("unknown key: " + key);
  return mf;
}

} // namespace djds
