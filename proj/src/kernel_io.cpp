#include "stripwet/path_sampler.hpp"
#include "stripwet/return_kernel.hpp"

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stripwet {

namespace {

constexpr char kMagic[8] = {'S', 'W', 'K', 'E', 'R', 'N', 'E', 'L'};
constexpr char kPathMagic[8] = {'S', 'W', 'P', 'A', 'T', 'H', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  template <class T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(std::span<const double> xs) {
    put<std::uint64_t>(xs.size());
    for (double x : xs) put(x);
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("binary write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open '" + path + "'");
  }
  template <class T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw std::runtime_error("truncated kernel file '" + path_ + "'");
    return to_little(v);
  }
  std::vector<double> get_doubles() {
    const auto n = get<std::uint64_t>();
    if (n > (1ULL << 34)) throw std::runtime_error("corrupt kernel file '" + path_ + "'");
    std::vector<double> xs(n);
    for (auto& x : xs) x = get<double>();
    return xs;
  }
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw std::runtime_error("truncated kernel file '" + path_ + "'");
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_kernel(const ReturnKernel& k, const std::string& path) {
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(k.law.kind()));
  w.put(k.law.parameter());
  w.put(k.a);
  w.put(static_cast<std::uint64_t>(k.n_max));
  w.put(static_cast<std::uint64_t>(k.n_nodes()));
  w.put(static_cast<std::uint64_t>(k.n_sources));
  w.put(static_cast<std::uint64_t>(k.origin));
  w.put(k.truncation_height);
  w.put(k.lost_mass_per_step);
  w.put_doubles(k.nodes);
  w.put_doubles(k.weights);
  w.put_doubles(k.tail_theta.data());
  w.put_doubles(k.values);
  w.put_doubles(k.survival);
  w.put_doubles(k.survival_tail);
  w.close();
}

ReturnKernel load_kernel(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw std::runtime_error("'" + path + "' is not a kernel file");
  if (r.get<std::uint32_t>() != kVersion) throw std::runtime_error("unsupported kernel file version in '" + path + "'");
  const auto kind = static_cast<LawKind>(r.get<std::uint32_t>());
  const double param = r.get<double>();
  ReturnKernel k;
  switch (kind) {
    case LawKind::DiscretePQ: k.law = IncrementLaw::pq(param); break;
    case LawKind::Gaussian: k.law = IncrementLaw::gaussian(param); break;
    case LawKind::UniformSym: k.law = IncrementLaw::uniform(param); break;
    default: throw std::runtime_error("unknown law in '" + path + "'");
  }
  k.a = r.get<double>();
  k.n_max = static_cast<long>(r.get<std::uint64_t>());
  const auto m = r.get<std::uint64_t>();
  k.n_sources = r.get<std::uint64_t>();
  k.origin = r.get<std::uint64_t>();
  k.truncation_height = r.get<double>();
  k.lost_mass_per_step = r.get<double>();
  k.nodes = r.get_doubles();
  k.weights = r.get_doubles();
  const auto theta = r.get_doubles();
  k.values = r.get_doubles();
  k.survival = r.get_doubles();
  k.survival_tail = r.get_doubles();
  const auto n_max = static_cast<std::size_t>(k.n_max);
  if (k.nodes.size() != m || k.weights.size() != m || theta.size() != k.n_sources * m ||
      k.values.size() != k.n_sources * m * n_max || k.survival.size() != k.n_sources * (n_max + 1) ||
      k.survival_tail.size() != k.n_sources || k.origin >= k.n_sources) {
    throw std::runtime_error("inconsistent dimensions in '" + path + "'");
  }
  k.tail_theta = Matrix(k.n_sources, m);
  std::copy(theta.begin(), theta.end(), k.tail_theta.data().begin());
  return k;
}

std::string kernel_cache_name(const IncrementLaw& law, double a, const KernelOptions& opts) {
  std::ostringstream os;
  os.precision(17);
  os << "kernel_v" << kVersion << "_" << law.to_string() << "_a" << a << "_n" << opts.n_max;
  if (!law.is_lattice())
    os << "_q" << opts.nodes << "_T" << opts.truncation_height << "_h" << opts.grid_step;
  std::string name = os.str();
  for (char& c : name)
    if (c == ':' || c == '=') c = '-';
  return name + ".bin";
}

ReturnKernel cached_kernel(const IncrementLaw& law, double a, const KernelOptions& opts) {
  const char* dir = std::getenv("STRIPWET_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return build_kernel(law, a, opts);
  const auto path = std::filesystem::path(dir) / kernel_cache_name(law, a, opts);
  if (std::filesystem::exists(path)) return load_kernel(path.string());
  ReturnKernel k = build_kernel(law, a, opts);
  std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::string>{}(path.string()) ^ reinterpret_cast<std::uintptr_t>(&k));
  save_kernel(k, tmp);
  std::filesystem::rename(tmp, path);
  return k;
}

void save_paths(const SampleSet& set, const std::string& path) {
  if (set.paths.size() != set.summaries.size()) throw std::invalid_argument("save_paths: sample set holds no paths");
  Writer w(path);
  w.raw(kPathMagic, sizeof(kPathMagic));
  w.put(kVersion);
  w.put(static_cast<std::uint64_t>(set.N));
  w.put(static_cast<std::uint64_t>(set.paths.size()));
  for (const auto& p : set.paths)
    for (double h : p.heights) w.put(h);
  w.close();
}

std::vector<std::vector<double>> load_paths(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kPathMagic, sizeof(magic)) != 0) throw std::runtime_error("'" + path + "' is not a path file");
  if (r.get<std::uint32_t>() != kVersion) throw std::runtime_error("unsupported path file version in '" + path + "'");
  const auto N = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (N > (1ULL << 20) || count > (1ULL << 32)) throw std::runtime_error("corrupt path file '" + path + "'");
  std::vector<std::vector<double>> out(count, std::vector<double>(N));
  for (auto& p : out)
    for (auto& h : p) h = r.get<double>();
  return out;
}

}  // namespace stripwet
