#include "wrsn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <zlib.h>

#include "wrsn/io.hpp"

namespace wrsn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'R', 'S', 'N', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

void put_array(std::string& buf, const Eigen::VectorXd& v) {
  buf.append(reinterpret_cast<const char*>(v.data()),
             static_cast<std::size_t>(v.size()) * sizeof(double));
}

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void array(Eigen::VectorXd& out) {
    const std::size_t n = static_cast<std::size_t>(out.size()) * sizeof(double);
    need(n);
    std::memcpy(out.data(), data_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw CheckpointError("checkpoint truncated");
  }

  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

json blocks_json(const ParamSet& p) {
  json out = json::array();
  for (const auto& b : p.blocks()) out.push_back({b.name, b.rows, b.cols});
  return out;
}

json adam_json(const AdamState& s) {
  return {{"step", s.step}, {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}};
}

void read_adam(const json& j, AdamState& s) {
  s.step = j.at("step").get<std::int64_t>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
}

std::uint32_t crc_of(const std::string& data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < len) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const TrainingState& st = ck.state;
  const ActorShape as = st.actor.shape();
  json header{
      {"actor_shape", {{"latent", as.latent}, {"attention", as.attention}, {"hidden", as.hidden}}},
      {"critic_shape", {{"hidden", st.critic.shape().hidden}}},
      {"actor_blocks", blocks_json(st.actor)},
      {"critic_blocks", blocks_json(st.critic)},
      {"actor_size", st.actor.size()},
      {"critic_size", st.critic.size()},
      {"actor_adam", adam_json(st.actor_opt)},
      {"critic_adam", adam_json(st.critic_opt)},
      {"epoch", st.epoch},
      {"train", train_config_to_json(ck.config)},
      {"metadata", ck.metadata},
  };
  const std::string text = header.dump();

  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kCheckpointVersion);
  put<std::uint64_t>(buf, text.size());
  buf += text;
  put_array(buf, st.actor.values());
  put_array(buf, st.critic.values());
  put_array(buf, st.actor_opt.m);
  put_array(buf, st.actor_opt.v);
  put_array(buf, st.critic_opt.m);
  put_array(buf, st.critic_opt.v);
  put<std::uint32_t>(buf, crc_of(buf, buf.size()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string where = path.string() + ": ";
  if (data.size() < sizeof(kMagic) + 4 + 8 + 4) throw CheckpointError(where + "file too short");
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(where + "not a checkpoint (bad magic)");
  }

  const std::size_t body = data.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, data.data() + body, 4);

  Reader r(data, body);
  r.bytes(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(where + "unsupported checkpoint version " + std::to_string(version));
  }
  if (crc_of(data, body) != stored_crc) throw CheckpointError(where + "checksum mismatch");

  try {
    const auto header_len = r.get<std::uint64_t>();
    if (header_len > r.remaining()) throw CheckpointError("header length out of range");
    const json header = json::parse(r.bytes(static_cast<std::size_t>(header_len)));

    ActorShape as;
    const json& ash = header.at("actor_shape");
    as.latent = ash.at("latent").get<int>();
    as.attention = ash.at("attention").get<int>();
    as.hidden = ash.at("hidden").get<int>();
    CriticShape cs;
    cs.hidden = header.at("critic_shape").at("hidden").get<int>();

    Checkpoint ck{TrainingState{ActorParams(as), CriticParams(cs), AdamState(), AdamState(), 0},
                  train_config_from_json(header.at("train")), header.value("metadata", json::object())};
    TrainingState& st = ck.state;
    if (header.at("actor_blocks") != blocks_json(st.actor) ||
        header.at("critic_blocks") != blocks_json(st.critic) ||
        header.at("actor_size").get<std::size_t>() != st.actor.size() ||
        header.at("critic_size").get<std::size_t>() != st.critic.size()) {
      throw CheckpointError("parameter layout does not match the declared shapes");
    }
    st.actor_opt = AdamState(static_cast<Eigen::Index>(st.actor.size()));
    st.critic_opt = AdamState(static_cast<Eigen::Index>(st.critic.size()));
    read_adam(header.at("actor_adam"), st.actor_opt);
    read_adam(header.at("critic_adam"), st.critic_opt);
    st.epoch = header.at("epoch").get<int>();

    r.array(st.actor.values());
    r.array(st.critic.values());
    r.array(st.actor_opt.m);
    r.array(st.actor_opt.v);
    r.array(st.critic_opt.m);
    r.array(st.critic_opt.v);
    if (r.remaining() != 0) throw CheckpointError("trailing bytes after payload");
    if (!st.actor.all_finite() || !st.critic.all_finite()) {
      throw CheckpointError("non-finite parameters");
    }
    return ck;
  } catch (const CheckpointError& e) {
    throw CheckpointError(where + e.what());
  } catch (const std::exception& e) {
    throw CheckpointError(where + "malformed header: " + e.what());
  }
}

}  // namespace wrsn
