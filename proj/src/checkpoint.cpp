#include "gjepa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gjepa/error.hpp"
#include "gjepa/hash.hpp"

namespace gjepa {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

using nlohmann::ordered_json;
constexpr char kMagic[8] = {'G', 'J', 'E', 'P', 'A', 'C', 'K', 'P'};

struct Writer {
  ordered_json tensors = ordered_json::array();
  std::string payload;

  void add(const std::string& name, const DenseMatrix& m) {
    tensors.push_back({{"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"offset", payload.size()}});
    payload.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
  }

  ordered_json adam(const std::string& name, const AdamState& s) {
    add(name + ".adam_m", s.first_moment);
    add(name + ".adam_v", s.second_moment);
    return {{"step", s.step_count}, {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}};
  }

  ordered_json layer(const std::string& name, const GcnLayer& l) {
    add(name + ".weight", l.weight);
    return {{"activation", activation_name(l.activation)}};
  }
};

struct Reader {
  std::map<std::string, ordered_json> index;
  std::string_view payload;

  [[noreturn]] static void bad(const std::string& what) { fail(Errc::checkpoint_mismatch, what); }

  DenseMatrix take(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) bad("missing tensor " + name);
    const auto rows = it->second.at("rows").get<std::size_t>();
    const auto cols = it->second.at("cols").get<std::size_t>();
    const auto offset = it->second.at("offset").get<std::size_t>();
    const std::size_t bytes = rows * cols * sizeof(double);
    if (offset > payload.size() || bytes > payload.size() - offset)
      bad("tensor " + name + " runs past the payload");
    DenseMatrix m(rows, cols);
    std::memcpy(m.data(), payload.data() + offset, bytes);
    return m;
  }

  AdamState adam(const std::string& name, const ordered_json& scalars) {
    AdamState s;
    s.first_moment = take(name + ".adam_m");
    s.second_moment = take(name + ".adam_v");
    s.step_count = scalars.at("step").get<std::uint64_t>();
    s.beta1 = scalars.at("beta1").get<double>();
    s.beta2 = scalars.at("beta2").get<double>();
    s.eps = scalars.at("eps").get<double>();
    return s;
  }

  GcnLayer layer(const std::string& name, const ordered_json& meta) {
    GcnLayer l;
    l.weight = take(name + ".weight");
    l.activation = parse_activation(meta.at("activation").get<std::string>());
    return l;
  }
};

template <class T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t pos) {
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EncoderState& state,
                     const RunConfig& cfg) {
  Writer w;
  ordered_json header;
  header["format"] = "gjepa-checkpoint";
  header["epoch"] = state.epoch;
  header["seed"] = state.seed;
  header["position_mode"] = position_mode_name(state.position_mode);

  ordered_json ctx = ordered_json::array();
  for (std::size_t l = 0; l < state.context.size(); ++l) {
    const std::string name = "context." + std::to_string(l);
    ctx.push_back({{"layer", w.layer(name, state.context[l])},
                   {"adam", w.adam(name, state.context_opt[l])}});
  }
  header["context"] = ctx;
  ordered_json tgt = ordered_json::array();
  for (std::size_t l = 0; l < state.target.size(); ++l)
    tgt.push_back(w.layer("target." + std::to_string(l), state.target[l]));
  header["target"] = tgt;
  ordered_json preds = ordered_json::array();
  for (std::size_t k = 0; k < state.predictors.size(); ++k) {
    ordered_json stack = ordered_json::array();
    for (std::size_t l = 0; l < state.predictors[k].size(); ++l) {
      const std::string name = "predictor." + std::to_string(k) + "." + std::to_string(l);
      stack.push_back({{"layer", w.layer(name, state.predictors[k][l])},
                       {"adam", w.adam(name, state.predictor_opt[k][l])}});
    }
    preds.push_back(stack);
  }
  header["predictors"] = preds;
  w.add("position", state.position);
  header["position_adam"] = w.adam("position", state.position_opt);

  ordered_json config;
  for (const auto& key : config_keys()) config[key] = cfg.get(key);
  header["config"] = config;
  header["tensors"] = w.tensors;
  header["payload_sha1"] = sha1_hex(w.payload);

  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += w.payload;

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io_error, "cannot write checkpoint " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(Errc::io_error, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  const std::size_t fixed = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < fixed || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    Reader::bad(path.string() + " is not a checkpoint");
  const auto version = get_le<std::uint32_t>(bytes, sizeof kMagic);
  if (version != kCheckpointVersion)
    Reader::bad("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, sizeof kMagic + sizeof(std::uint32_t));
  if (header_len > bytes.size() - fixed) Reader::bad("truncated checkpoint header");

  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(fixed, header_len));
  } catch (const nlohmann::json::exception& e) {
    Reader::bad(std::string("corrupt checkpoint header: ") + e.what());
  }

  Reader r;
  r.payload = std::string_view(bytes).substr(fixed + header_len);
  Checkpoint ck;
  try {
    if (header.at("payload_sha1").get<std::string>() != sha1_hex(r.payload))
      Reader::bad("checkpoint payload checksum mismatch");
    for (const auto& t : header.at("tensors")) r.index[t.at("name").get<std::string>()] = t;

    EncoderState& s = ck.state;
    s.epoch = header.at("epoch").get<int>();
    s.seed = header.at("seed").get<std::uint64_t>();
    s.position_mode = parse_position_mode(header.at("position_mode").get<std::string>());
    const auto& ctx = header.at("context");
    for (std::size_t l = 0; l < ctx.size(); ++l) {
      const std::string name = "context." + std::to_string(l);
      s.context.push_back(r.layer(name, ctx[l].at("layer")));
      s.context_opt.push_back(r.adam(name, ctx[l].at("adam")));
    }
    const auto& tgt = header.at("target");
    for (std::size_t l = 0; l < tgt.size(); ++l)
      s.target.push_back(r.layer("target." + std::to_string(l), tgt[l]));
    const auto& preds = header.at("predictors");
    for (std::size_t k = 0; k < preds.size(); ++k) {
      std::vector<GcnLayer> stack;
      std::vector<AdamState> opt;
      for (std::size_t l = 0; l < preds[k].size(); ++l) {
        const std::string name = "predictor." + std::to_string(k) + "." + std::to_string(l);
        stack.push_back(r.layer(name, preds[k][l].at("layer")));
        opt.push_back(r.adam(name, preds[k][l].at("adam")));
      }
      s.predictors.push_back(std::move(stack));
      s.predictor_opt.push_back(std::move(opt));
    }
    s.position = r.take("position");
    s.position_opt = r.adam("position", header.at("position_adam"));

    for (const auto& [key, value] : header.at("config").items())
      ck.config.set(key, value.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    Reader::bad(std::string("malformed checkpoint header: ") + e.what());
  }

  const EncoderState& s = ck.state;
  if (s.context.empty() || s.context.size() != s.target.size())
    Reader::bad("context and target encoders differ in depth");
  for (std::size_t l = 0; l < s.context.size(); ++l)
    if (!s.context[l].weight.same_shape(s.target[l].weight))
      Reader::bad("context and target layer " + std::to_string(l) + " differ in shape");
  return ck;
}

}  // namespace gjepa
