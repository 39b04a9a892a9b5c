#include "actdst/checkpoint.h"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "actdst/errors.h"

namespace actdst {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kMagic[8] = {'A', 'D', 'S', 'T', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw CheckpointError("corrupt checkpoint: truncated " + what);
  return value;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

void save_checkpoint(Model& model, const RunConfig& config, int epoch,
                     long step, const std::filesystem::path& path) {
  const Ontology& ontology = model.ontology();
  ordered_json header;
  RunConfig snapshot = config;
  snapshot.act_attention = model.attention().act_attention();
  header["config"] = ordered_json::parse(serialize_run_config(snapshot));
  header["ontology_hash"] = hex(ontology_hash(ontology));
  ordered_json partition = ordered_json::object();
  for (const SlotSpec& s : ontology.slots())
    partition[s.id.key()] = std::string(to_string(s.kind));
  header["partition"] = partition;
  header["has_k2"] = model.attention().has_k2();
  header["words"] = model.words().items();
  header["chars"] = model.chars().items();
  header["epoch"] = epoch;
  header["step"] = step;
  ordered_json params = ordered_json::array();
  for (const Parameter* p : model.parameters())
    params.push_back({{"name", p->name},
                      {"rows", p->value.rows()},
                      {"cols", p->value.cols()},
                      {"trainable", p->trainable}});
  header["params"] = params;
  const std::string text = header.dump();

  std::ostringstream payload(std::ios::binary);
  for (const Parameter* p : model.parameters())
    payload.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() *
                                               sizeof(double)));
  const std::string bytes = payload.str();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  write_pod<std::uint64_t>(
      out, fnv1a(bytes.data(), bytes.size(),
                 fnv1a(text.data(), text.size(), 14695981039346656037ULL)));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

namespace {

json read_header(std::istream& in, const std::filesystem::path& path,
                 std::string& text) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path.string() + " is not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint format version " +
                          std::to_string(version) + " (this build reads " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto header_size = read_pod<std::uint64_t>(in, "header size");
  if (header_size > (1ULL << 32))
    throw CheckpointError("corrupt checkpoint: header size");
  text.assign(header_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_size)))
    throw CheckpointError("corrupt checkpoint: truncated header");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") +
                          e.what());
  }
}

}  // namespace

RunConfig read_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::string text;
  const json header = read_header(in, path, text);
  try {
    return parse_run_config(header.at("config").dump());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") +
                          e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const Ontology& ontology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::string text;
  const json header = read_header(in, path, text);

  LoadedCheckpoint out;
  Ontology partitioned = ontology;
  std::vector<std::pair<const Parameter*, std::size_t>> layout;
  std::unique_ptr<Model> model;
  try {
    if (header.at("ontology_hash").get<std::string>() !=
        hex(ontology_hash(ontology)))
      throw CheckpointError(
          "checkpoint was trained against a different ontology (hash " +
          header.at("ontology_hash").get<std::string>() + ", given " +
          hex(ontology_hash(ontology)) + ")");
    out.config = parse_run_config(header.at("config").dump());
    out.epoch = header.at("epoch").get<int>();
    out.step = header.at("step").get<long>();
    const json& partition = header.at("partition");
    for (std::size_t m = 0; m < partitioned.size(); ++m) {
      const std::string kind =
          partition.at(partitioned.slot(m).id.key()).get<std::string>();
      partitioned.set_kind(m, kind == to_string(SlotKind::kCategorical)
                                  ? SlotKind::kCategorical
                                  : SlotKind::kNonCategorical);
    }
    Vocabulary words(header.at("words").get<std::vector<std::string>>());
    Vocabulary chars(header.at("chars").get<std::vector<std::string>>());
    ModelConfig mc = out.config.model_config();
    mc.act_attention = header.at("has_k2").get<bool>();
    std::unique_ptr<EmbeddingProvider> provider;
    if (mc.embedding.provider == ProviderKind::kPretrainedContextual)
      provider = std::make_unique<LookupProvider>(
          words,
          Parameter("encoder.word",
                    Matrix::Zero(static_cast<Eigen::Index>(words.size()),
                                 mc.embedding.word_dim),
                    false),
          ProviderKind::kPretrainedContextual);
    model = std::make_unique<Model>(mc, partitioned, std::move(words),
                                    std::move(chars), out.config.seed,
                                    std::move(provider));
    model->set_act_attention(out.config.act_attention);

    std::set<std::string> seen;
    const json& params = header.at("params");
    if (params.size() != model->parameters().size())
      throw CheckpointError("checkpoint holds " +
                            std::to_string(params.size()) +
                            " parameters, model expects " +
                            std::to_string(model->parameters().size()));
    for (const json& p : params) {
      const std::string name = p.at("name").get<std::string>();
      Parameter* target = model->find_parameter(name);
      if (target == nullptr || !seen.insert(name).second)
        throw CheckpointError("unexpected parameter " + name);
      if (target->value.rows() != p.at("rows").get<Eigen::Index>() ||
          target->value.cols() != p.at("cols").get<Eigen::Index>())
        throw CheckpointError("shape mismatch for parameter " + name);
      layout.emplace_back(target, static_cast<std::size_t>(target->value.size()));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") +
                          e.what());
  } catch (const DataError& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") +
                          e.what());
  }

  std::uint64_t checksum =
      fnv1a(text.data(), text.size(), 14695981039346656037ULL);
  for (auto& [p, n] : layout) {
    auto* target = const_cast<Parameter*>(p);
    const std::streamsize bytes =
        static_cast<std::streamsize>(n * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(target->value.data()), bytes))
      throw CheckpointError("corrupt checkpoint: truncated parameter " +
                            target->name);
    checksum = fnv1a(reinterpret_cast<const char*>(target->value.data()),
                     static_cast<std::size_t>(bytes), checksum);
  }
  if (read_pod<std::uint64_t>(in, "checksum") != checksum)
    throw CheckpointError("corrupt checkpoint: checksum mismatch");
  out.model = std::move(model);
  return out;
}

}  // namespace actdst
