#include "vqasynth/records.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vqasynth/errors.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth {

namespace {

constexpr std::array<std::pair<PipelineKind, std::string_view>, 3> kPipelines{{
    {PipelineKind::kSingleStep, "single-step"},
    {PipelineKind::kSingleStepVip, "single-step-vip"},
    {PipelineKind::kMultiStep, "multi-step"},
}};

constexpr std::array<std::pair<Reason, std::string_view>, 9> kReasons{{
    {Reason::kNone, "none"},
    {Reason::kTokenFormatError, "TokenFormatError"},
    {Reason::kUnfinishedGeneration, "UnfinishedGeneration"},
    {Reason::kHiddenContext, "HiddenContext"},
    {Reason::kQuestionFormat, "QuestionFormat"},
    {Reason::kTransportError, "TransportError"},
    {Reason::kBackendError, "BackendError"},
    {Reason::kImageError, "ImageError"},
    {Reason::kNoEligibleObject, "NoEligibleObject"},
}};

constexpr std::array<std::pair<SlotStatus, std::string_view>, 3> kStatuses{{
    {SlotStatus::kValid, "valid"},
    {SlotStatus::kInvalid, "invalid"},
    {SlotStatus::kSkipped, "skipped"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) noexcept {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view name) noexcept {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(PipelineKind kind) noexcept { return name_of(kPipelines, kind); }
std::optional<PipelineKind> pipeline_from_string(std::string_view name) noexcept { return value_of(kPipelines, name); }
std::string_view to_string(Reason reason) noexcept { return name_of(kReasons, reason); }
std::optional<Reason> reason_from_string(std::string_view name) noexcept { return value_of(kReasons, name); }
std::string_view to_string(SlotStatus status) noexcept { return name_of(kStatuses, status); }
std::optional<SlotStatus> status_from_string(std::string_view name) noexcept { return value_of(kStatuses, name); }

bool TripletMeta::operator==(const TripletMeta& o) const {
  return image_id == o.image_id && pipeline == o.pipeline && prefix == o.prefix && object == o.object &&
         model == o.model && seed == o.seed && raw == o.raw && candidates == o.candidates &&
         candidate_sources == o.candidate_sources && candidate_scores == o.candidate_scores && winner == o.winner;
}

namespace records {

using nlohmann::ordered_json;

std::string triplet_id(const Record& r) { return r.image_id + ":" + std::to_string(r.slot); }

namespace {

ordered_json to_json(const Record& r) {
  const auto& m = r.triplet.meta;
  ordered_json meta;
  meta["pipeline"] = to_string(m.pipeline);
  meta["prefix"] = m.prefix;
  if (m.object) {
    meta["object"] = {{"name", m.object->name}, {"x", m.object->x}, {"y", m.object->y},
                      {"w", m.object->w},       {"h", m.object->h}};
  } else {
    meta["object"] = nullptr;
  }
  meta["model"] = m.model;
  meta["seed"] = m.seed;
  meta["raw"] = m.raw;
  meta["candidates"] = m.candidates;
  meta["candidate_sources"] = m.candidate_sources;
  meta["candidate_scores"] = m.candidate_scores;
  meta["winner"] = m.winner ? ordered_json(*m.winner) : ordered_json(nullptr);

  ordered_json j;
  j["id"] = triplet_id(r);
  j["index"] = r.index;
  j["image_id"] = r.image_id;
  j["slot"] = r.slot;
  j["status"] = to_string(r.status);
  j["reason"] = to_string(r.reason);
  j["stage"] = r.stage;
  j["detail"] = r.detail;
  j["question"] = r.triplet.question;
  j["answer"] = r.triplet.answer;
  j["explanation"] = r.triplet.explanation;
  j["meta"] = std::move(meta);
  return j;
}

template <typename T>
T field(const ordered_json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw DatasetFormatError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(line, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string to_json_line(const Record& r) { return to_json(r).dump(); }

Record from_json_line(std::string_view line, std::size_t line_number) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetFormatError(line_number, e.what());
  }
  if (!j.is_object()) throw DatasetFormatError(line_number, "record is not a JSON object");

  Record r;
  r.index = field<std::size_t>(j, "index", line_number);
  r.image_id = field<std::string>(j, "image_id", line_number);
  r.slot = field<std::size_t>(j, "slot", line_number);
  const auto status = status_from_string(field<std::string>(j, "status", line_number));
  if (!status) throw DatasetFormatError(line_number, "unknown status");
  r.status = *status;
  const auto reason = reason_from_string(field<std::string>(j, "reason", line_number));
  if (!reason) throw DatasetFormatError(line_number, "unknown reason");
  r.reason = *reason;
  r.stage = field<std::string>(j, "stage", line_number);
  r.detail = field<std::string>(j, "detail", line_number);
  r.triplet.question = field<std::string>(j, "question", line_number);
  r.triplet.answer = field<std::string>(j, "answer", line_number);
  r.triplet.explanation = field<std::string>(j, "explanation", line_number);

  const auto meta_it = j.find("meta");
  if (meta_it == j.end() || !meta_it->is_object()) throw DatasetFormatError(line_number, "missing object 'meta'");
  const auto& mj = *meta_it;
  auto& m = r.triplet.meta;
  m.image_id = r.image_id;
  const auto pipeline = pipeline_from_string(field<std::string>(mj, "pipeline", line_number));
  if (!pipeline) throw DatasetFormatError(line_number, "unknown pipeline");
  m.pipeline = *pipeline;
  m.prefix = field<std::string>(mj, "prefix", line_number);
  if (const auto o = mj.find("object"); o != mj.end() && !o->is_null()) {
    corpus::SceneGraphObject obj;
    obj.name = field<std::string>(*o, "name", line_number);
    obj.x = field<int>(*o, "x", line_number);
    obj.y = field<int>(*o, "y", line_number);
    obj.w = field<int>(*o, "w", line_number);
    obj.h = field<int>(*o, "h", line_number);
    m.object = std::move(obj);
  }
  m.model = field<std::string>(mj, "model", line_number);
  m.seed = field<std::uint64_t>(mj, "seed", line_number);
  m.raw = field<std::vector<std::string>>(mj, "raw", line_number);
  m.candidates = field<std::vector<std::string>>(mj, "candidates", line_number);
  m.candidate_sources = field<std::vector<std::string>>(mj, "candidate_sources", line_number);
  m.candidate_scores = field<std::vector<double>>(mj, "candidate_scores", line_number);
  if (const auto w = mj.find("winner"); w != mj.end() && !w->is_null()) {
    m.winner = field<std::size_t>(mj, "winner", line_number);
  }
  return r;
}

void write_dataset(const std::filesystem::path& path, std::span<const Record> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  write_file_atomic(path.string(), out);
}

std::vector<Record> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    out.push_back(from_json_line(line, n));
  }
  return out;
}

JournalWriter::JournalWriter(const std::filesystem::path& path) {
  file_ = std::fopen(path.string().c_str(), "ab");
  if (file_ == nullptr) throw Error("cannot open journal " + path.string());
}

JournalWriter::~JournalWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void JournalWriter::append(const Record& r) {
  const auto line = to_json_line(r) + '\n';
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw Error("journal write failed");
  }
}

std::vector<Record> read_journal(const std::filesystem::path& path) {
  std::vector<Record> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::size_t pos = 0;
  std::size_t n = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    ++n;
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (trim(line).empty()) continue;
    try {
      out.push_back(from_json_line(line, n));
    } catch (const DatasetFormatError&) {
      break;
    }
  }
  return out;
}

}  // namespace records
}  // namespace vqasynth
