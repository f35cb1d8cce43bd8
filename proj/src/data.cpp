#include "scope/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "scope/errors.hpp"

namespace scope {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

const char* skip_space(const char* p) {
  while (is_space(*p)) ++p;
  return p;
}

std::string shortest_repr(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset parse_svmlight(std::istream& in, std::uint32_t dim_override) {
  Dataset ds;
  std::uint32_t max_index = 0;  // 1-based
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || is_space(line.back()))) line.pop_back();
    const char* p = skip_space(line.c_str());
    if (*p == '\0') continue;

    LabeledInstance inst;
    char* end = nullptr;
    const double raw_label = std::strtod(p, &end);
    if (end == p || (*end != '\0' && !is_space(*end)) || !std::isfinite(raw_label)) {
      throw ParseError(lineno, "malformed label");
    }
    inst.label = raw_label <= 0.0 ? -1 : +1;
    p = end;

    std::uint32_t prev_index = 0;
    for (;;) {
      p = skip_space(p);
      if (*p == '\0') break;
      if (!std::isdigit(static_cast<unsigned char>(*p))) {
        throw ParseError(lineno, "malformed feature (expected index:value)");
      }
      const unsigned long idx = std::strtoul(p, &end, 10);
      if (end == p || *end != ':') {
        throw ParseError(lineno, "malformed feature (expected index:value)");
      }
      if (idx == 0) throw ParseError(lineno, "feature indices are 1-based");
      if (idx > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(lineno, "feature index too large");
      }
      const auto index = static_cast<std::uint32_t>(idx);
      if (index <= prev_index) {
        throw ParseError(lineno, "feature indices must be strictly increasing");
      }
      p = end + 1;
      const double value = std::strtod(p, &end);
      if (end == p || (*end != '\0' && !is_space(*end)) || !std::isfinite(value)) {
        throw ParseError(lineno, "malformed feature value");
      }
      p = end;
      if (dim_override != 0 && index > dim_override) {
        throw ParseError(lineno, "feature index exceeds declared dimension");
      }
      prev_index = index;
      max_index = std::max(max_index, index);
      inst.features.push_back(Feature{index - 1, value});
    }
    ds.instances.push_back(std::move(inst));
  }
  if (ds.instances.empty()) throw ParseError(lineno, "empty dataset");
  ds.dim = dim_override != 0 ? dim_override : max_index;
  return ds;
}

Dataset parse_svmlight(const std::string& text, std::uint32_t dim_override) {
  std::istringstream in(text);
  return parse_svmlight(in, dim_override);
}

Dataset parse_svmlight_file(const std::string& path, std::uint32_t dim_override) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return parse_svmlight(in, dim_override);
}

void write_svmlight(const Dataset& ds, std::ostream& out) {
  for (const LabeledInstance& inst : ds.instances) {
    out << (inst.label > 0 ? "+1" : "-1");
    for (const Feature& f : inst.features) {
      out << ' ' << (f.index + 1) << ':' << shortest_repr(f.value);
    }
    out << '\n';
  }
}

std::string write_svmlight(const Dataset& ds) {
  std::ostringstream out;
  write_svmlight(ds, out);
  return out.str();
}

Dataset normalize(Dataset ds) {
  for (LabeledInstance& inst : ds.instances) {
    double s = 0.0;
    for (const Feature& f : inst.features) s += f.value * f.value;
    if (s <= 0.0) continue;
    const double norm = std::sqrt(s);
    for (Feature& f : inst.features) f.value /= norm;
  }
  return ds;
}

std::vector<Partition> partition(const Dataset& ds, int p, const PartitionStrategy& strategy) {
  const std::size_t n = ds.n();
  if (p < 1) throw std::invalid_argument("partition count must be >= 1");
  if (static_cast<std::size_t>(p) > n) {
    throw std::invalid_argument("more partitions than instances");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (strategy.kind) {
    case PartitionStrategy::Kind::Contiguous:
      break;
    case PartitionStrategy::Kind::ShuffledUniform: {
      std::mt19937_64 rng(strategy.seed);
      for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = uniform_index(rng, i + 1);
        std::swap(order[i], order[j]);
      }
      break;
    }
    case PartitionStrategy::Kind::LabelSorted:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.instances[a].label < ds.instances[b].label;
      });
      break;
  }

  std::vector<Partition> parts(static_cast<std::size_t>(p));
  const std::size_t base = n / static_cast<std::size_t>(p);
  const std::size_t extra = n % static_cast<std::size_t>(p);
  std::size_t pos = 0;
  for (int k = 0; k < p; ++k) {
    Partition& part = parts[static_cast<std::size_t>(k)];
    part.worker_id = k + 1;
    const std::size_t size = base + (static_cast<std::size_t>(k) < extra ? 1 : 0);
    part.instances.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      part.instances.push_back(ds.instances[order[pos++]]);
    }
  }
  return parts;
}

namespace {

// Box-Muller over the pinned PRNG. Self-contained so generated datasets do
// not vary with the standard library's normal_distribution.
class NormalGen {
 public:
  explicit NormalGen(std::mt19937_64& rng) : rng_(rng) {}

  double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 == 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::mt19937_64& rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

Dataset make_synthetic_lr(std::size_t n, std::uint32_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("synthetic dataset needs n >= 1, d >= 1");
  std::mt19937_64 rng(seed);
  NormalGen normal(rng);

  ModelVector planted(d);
  for (double& x : planted) x = normal();

  Dataset ds;
  ds.dim = d;
  ds.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledInstance inst;
    inst.features.reserve(d);
    double margin = 0.0;
    for (std::uint32_t j = 0; j < d; ++j) {
      const double x = normal();
      margin += x * planted[j];
      inst.features.push_back(Feature{j, x});
    }
    const double prob = 1.0 / (1.0 + std::exp(-4.0 * margin));
    inst.label = normal.uniform01() < prob ? +1 : -1;
    double s = 0.0;
    for (const Feature& f : inst.features) s += f.value * f.value;
    if (s > 0.0) {
      const double norm = std::sqrt(s);
      for (Feature& f : inst.features) f.value /= norm;
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

ToyProblem make_toy_table1() {
  ToyProblem toy;
  toy.loss = LossKind::quadratic_1d({{1.0, 1.0}, {100.0, 10.0}});
  toy.dataset.dim = 1;
  toy.dataset.instances = {
      LabeledInstance{{Feature{0, 0.0}}, +1},
      LabeledInstance{{Feature{0, 1.0}}, +1},
  };
  // d/dw [ (w-1)^2 + 100 (w-10)^2 ] = 0  =>  w = 1001/101.
  toy.wstar = 1001.0 / 101.0;
  return toy;
}

}  // namespace scope
