#include "chebnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace chebnet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'B', 'N', 'E', 'T', 'C', 'K', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated parameter block");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json j;
  j["arch"] = m.spec.arch;
  j["task"] = to_string(m.spec.task);
  j["k"] = m.spec.k;
  j["init_seed"] = m.init_seed;
  j["seed"] = meta.seed;
  j["best_epoch"] = meta.best_epoch;
  const std::string blob = j.dump();

  out.write(kMagic, 8);
  write_u64(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  write_doubles(out, m.params);
  write_doubles(out, m.buffers);
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  const std::uint64_t meta_len = read_u64(in);
  std::string blob(meta_len, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw std::runtime_error("checkpoint: truncated metadata");

  json j = json::parse(blob);
  const ModelSpec spec = parse_model_spec(j.at("arch").get<std::string>(),
                                          task_from_string(j.at("task").get<std::string>()),
                                          j.at("k").get<std::size_t>());

  LoadedCheckpoint lc{build_model(spec, j.value("init_seed", std::uint64_t{0})), {}};
  lc.meta.seed = j.value("seed", std::uint64_t{0});
  lc.meta.best_epoch = j.value("best_epoch", -1);

  std::vector<double> params = read_doubles(in);
  std::vector<double> buffers = read_doubles(in);
  if (params.size() != lc.model.params.size() || buffers.size() != lc.model.buffers.size())
    throw std::runtime_error("checkpoint: parameter block size does not match architecture");
  lc.model.params = std::move(params);
  lc.model.buffers = std::move(buffers);
  return lc;
}

}  // namespace chebnet
