#include "seamstain/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "seamstain/config_json.hpp"

namespace seamstain {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

struct Blob {
  std::string name;
  const float* data = nullptr;
  std::size_t count = 0;
};

void add_pool(std::vector<Blob>& blobs, nlohmann::json& meta, const ImagePool& pool, const char* name) {
  nlohmann::json shapes = nlohmann::json::array();
  for (std::size_t i = 0; i < pool.images().size(); ++i) {
    const Tensor<float>& t = pool.images()[i];
    shapes.push_back({t.n(), t.c(), t.h(), t.w()});
    blobs.push_back({std::string(name) + "." + std::to_string(i), t.data(), t.size()});
  }
  meta[name] = {{"capacity", pool.capacity()}, {"shapes", shapes}};
}

void add_adam(std::vector<Blob>& blobs, nlohmann::json& meta, const AdamState& s, const char* name) {
  meta[name] = {{"t", s.t}, {"initialized", !s.m.empty()}};
  if (!s.m.empty()) {
    blobs.push_back({std::string(name) + ".m", s.m.data(), s.m.size()});
    blobs.push_back({std::string(name) + ".v", s.v.data(), s.v.size()});
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& b) {
  nlohmann::json meta;
  meta["format"] = kCheckpointMagic;
  meta["generator"] = b.generator;
  meta["discriminator"] = b.discriminator;
  meta["seed"] = b.seed;
  meta["epoch"] = b.epoch;
  meta["step"] = b.step;
  std::ostringstream rng_text;
  rng_text << b.rng;
  meta["rng"] = rng_text.str();

  std::vector<Blob> blobs;
  auto add_net = [&](const Network<float>& net, const char* name) {
    blobs.push_back({name, net.params().data(), net.params().size()});
  };
  add_net(b.g1.network(), "g1");
  add_net(b.g2.network(), "g2");
  add_net(b.d1.network(), "d1");
  add_net(b.d2.network(), "d2");
  add_adam(blobs, meta, b.opt_g1, "opt_g1");
  add_adam(blobs, meta, b.opt_g2, "opt_g2");
  add_adam(blobs, meta, b.opt_d1, "opt_d1");
  add_adam(blobs, meta, b.opt_d2, "opt_d2");
  add_pool(blobs, meta, b.pool_x, "pool_x");
  add_pool(blobs, meta, b.pool_y, "pool_y");
  nlohmann::json list = nlohmann::json::array();
  for (const Blob& blob : blobs) list.push_back({{"name", blob.name}, {"count", blob.count}});
  meta["blobs"] = list;

  const std::string text = meta.dump();
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << kCheckpointMagic << '\n';
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Blob& blob : blobs) {
      out.write(reinterpret_cast<const char*>(blob.data), static_cast<std::streamsize>(blob.count * sizeof(float)));
    }
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

class BlobReader {
 public:
  BlobReader(std::ifstream& in, const nlohmann::json& list, std::string path)
      : in_(in), list_(list), path_(std::move(path)) {}

  void read_into(const std::string& name, std::span<float> dst) {
    if (next_ >= list_.size()) throw IoError(path_ + ": missing blob " + name);
    const auto& entry = list_[next_++];
    if (entry.at("name").get<std::string>() != name || entry.at("count").get<std::size_t>() != dst.size()) {
      throw IoError(path_ + ": blob " + name + " does not match the architecture");
    }
    in_.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * sizeof(float)));
    if (!in_) throw IoError(path_ + ": truncated at blob " + name);
  }

  std::size_t remaining() const { return list_.size() - next_; }

 private:
  std::ifstream& in_;
  const nlohmann::json& list_;
  std::string path_;
  std::size_t next_ = 0;
};

void read_adam(BlobReader& r, const nlohmann::json& meta, AdamState& s, const char* name, std::size_t n) {
  const auto& m = meta.at(name);
  s.t = m.at("t").get<std::int64_t>();
  if (m.at("initialized").get<bool>()) {
    s.m.assign(n, 0.0f);
    s.v.assign(n, 0.0f);
    r.read_into(std::string(name) + ".m", s.m);
    r.read_into(std::string(name) + ".v", s.v);
  }
}

void read_pool(BlobReader& r, const nlohmann::json& meta, ImagePool& pool, const char* name) {
  const auto& m = meta.at(name);
  pool = ImagePool(m.at("capacity").get<int>());
  const auto& shapes = m.at("shapes");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    Tensor<float> t(s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(), s.at(3).get<int>());
    r.read_into(std::string(name) + "." + std::to_string(i), t.values());
    pool.images().push_back(std::move(t));
  }
}

}  // namespace

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) throw IoError(path.string() + ": not a seamstain checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1ULL << 32)) throw IoError(path.string() + ": corrupt header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated metadata");

  try {
    const nlohmann::json meta = nlohmann::json::parse(text);
    ModelBundle b = make_bundle(meta.at("generator").get<GeneratorConfig>(),
                                meta.at("discriminator").get<DiscriminatorConfig>(),
                                meta.at("seed").get<std::uint64_t>(), 0);
    b.epoch = meta.at("epoch").get<int>();
    b.step = meta.at("step").get<std::int64_t>();
    std::istringstream rng_text(meta.at("rng").get<std::string>());
    rng_text >> b.rng;
    if (!rng_text) throw IoError(path.string() + ": bad rng state");

    BlobReader r(in, meta.at("blobs"), path.string());
    r.read_into("g1", b.g1.network().params());
    r.read_into("g2", b.g2.network().params());
    r.read_into("d1", b.d1.network().params());
    r.read_into("d2", b.d2.network().params());
    read_adam(r, meta, b.opt_g1, "opt_g1", b.g1.network().parameter_count());
    read_adam(r, meta, b.opt_g2, "opt_g2", b.g2.network().parameter_count());
    read_adam(r, meta, b.opt_d1, "opt_d1", b.d1.network().parameter_count());
    read_adam(r, meta, b.opt_d2, "opt_d2", b.d2.network().parameter_count());
    read_pool(r, meta, b.pool_x, "pool_x");
    read_pool(r, meta, b.pool_y, "pool_y");
    if (r.remaining() != 0) throw IoError(path.string() + ": unexpected extra blobs");
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad metadata: " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": bad metadata: " + e.what());
  }
}

}  // namespace seamstain
