#include "vqasynth/score_store.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vqasynth/errors.hpp"
#include "vqasynth/util.hpp"

namespace vqasynth::runner {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json to_json(const ScoreRecord& s) {
  ordered_json scores;
  for (std::size_t c = 0; c < quality::kCriteria.size(); ++c) scores[std::string(quality::kCriteria[c])] = s.scores[c];
  return {{"triplet_id", s.triplet_id}, {"rater", s.rater}, {"scores", scores}, {"timestamp", s.timestamp}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ScoreRecord score_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw std::invalid_argument(std::string("body is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("body must be a JSON object");
  ScoreRecord s;
  try {
    s.triplet_id = j.value("triplet_id", "");
    s.rater = j.value("rater", "");
    s.timestamp = j.value("timestamp", "");
  } catch (const ordered_json::exception&) {
    throw std::invalid_argument("triplet_id, rater and timestamp must be strings");
  }
  const auto sc = j.find("scores");
  if (sc == j.end() || !sc->is_object()) throw std::invalid_argument("missing object 'scores'");
  if (sc->size() != quality::kCriteria.size()) {
    throw std::invalid_argument("'scores' must hold exactly the five criteria");
  }
  for (std::size_t c = 0; c < quality::kCriteria.size(); ++c) {
    const auto it = sc->find(std::string(quality::kCriteria[c]));
    if (it == sc->end()) throw std::invalid_argument("missing criterion '" + std::string(quality::kCriteria[c]) + "'");
    if (!it->is_number_integer() || !quality::is_valid_rating(it->get<int>())) {
      throw std::invalid_argument("criterion '" + std::string(quality::kCriteria[c]) + "' must be -1, 1, 2 or 3");
    }
    s.scores[c] = it->get<int>();
  }
  return s;
}

std::string score_to_json(const ScoreRecord& s) { return to_json(s).dump(); }

ScoreStore::ScoreStore(fs::path log_path, std::size_t compact_every)
    : log_path_(std::move(log_path)), compact_every_(compact_every) {
  std::ifstream in(log_path_);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto s = score_from_json(line);
      state_[{s.triplet_id, s.rater}] = std::move(s);
    } catch (const std::invalid_argument& e) {
      spdlog::warn("{}:{}: skipping unreadable score line: {}", log_path_.string(), n, e.what());
    }
  }
}

fs::path ScoreStore::audit_path() const {
  auto p = log_path_;
  p += ".audit";
  return p;
}

void ScoreStore::append_line(const fs::path& path, const std::string& line) {
  std::FILE* f = std::fopen(path.string().c_str(), "ab");
  if (f == nullptr) throw Error("cannot append to " + path.string());
  const auto data = line + "\n";
  const bool ok = std::fwrite(data.data(), 1, data.size(), f) == data.size() && std::fflush(f) == 0;
  std::fclose(f);
  if (!ok) throw Error("write to " + path.string() + " failed");
}

ScoreStore::SubmitResult ScoreStore::submit(ScoreRecord record) {
  if (record.triplet_id.empty()) throw std::invalid_argument("missing triplet_id");
  if (record.rater.empty()) throw std::invalid_argument("missing rater");
  for (int v : record.scores) {
    if (!quality::is_valid_rating(v)) throw std::invalid_argument("rating outside {-1,1,2,3}");
  }
  if (record.timestamp.empty()) record.timestamp = utc_now();

  std::lock_guard lock(mutex_);
  SubmitResult result;
  const auto key = std::make_pair(record.triplet_id, record.rater);
  const auto it = state_.find(key);
  append_line(log_path_, score_to_json(record));
  if (it != state_.end()) {
    result.overwritten = true;
    ordered_json audit{{"event", "overwrite"},
                       {"triplet_id", record.triplet_id},
                       {"rater", record.rater},
                       {"previous", to_json(it->second)},
                       {"current", to_json(record)}};
    append_line(audit_path(), audit.dump());
  }
  state_[key] = std::move(record);
  if (compact_every_ > 0 && ++appends_since_compact_ >= compact_every_) compact_locked();
  return result;
}

std::vector<ScoreRecord> ScoreStore::resolved() const {
  std::lock_guard lock(mutex_);
  std::vector<ScoreRecord> out;
  out.reserve(state_.size());
  for (const auto& [key, s] : state_) out.push_back(s);
  return out;
}

std::set<std::string> ScoreStore::scored_by(const std::string& rater) const {
  std::lock_guard lock(mutex_);
  std::set<std::string> out;
  for (const auto& [key, s] : state_) {
    if (key.second == rater) out.insert(key.first);
  }
  return out;
}

std::size_t ScoreStore::size() const {
  std::lock_guard lock(mutex_);
  return state_.size();
}

void ScoreStore::compact() {
  std::lock_guard lock(mutex_);
  compact_locked();
}

void ScoreStore::compact_locked() {
  std::string text;
  for (const auto& [key, s] : state_) text += score_to_json(s) + "\n";
  write_file_atomic(log_path_.string(), text);
  appends_since_compact_ = 0;
}

AgreementSummary summarize_agreement(const std::vector<ScoreRecord>& scores) {
  AgreementSummary a;
  std::map<std::string, std::map<std::string, const ScoreRecord*>> by_item;
  std::set<std::string> raters;
  for (const auto& s : scores) {
    raters.insert(s.rater);
    by_item[s.triplet_id][s.rater] = &s;
  }
  a.raters.assign(raters.begin(), raters.end());

  std::array<quality::RatingTable, 5> tables;
  for (const auto& [item, row] : by_item) {
    if (row.size() != raters.size()) continue;
    ++a.items;
    for (std::size_t c = 0; c < tables.size(); ++c) {
      std::vector<int> cells;
      for (const auto& r : a.raters) cells.push_back(row.at(r)->scores[c]);
      tables[c].items.push_back(std::move(cells));
    }
  }

  auto fill = [](CriterionAgreement& out, const quality::RatingTable& t) {
    try {
      const auto terms = quality::gwet_ac2_terms(t);
      out.ac2 = terms.ac2;
      out.items_used = terms.items_used;
    } catch (const MetricError&) {
    }
  };
  for (std::size_t c = 0; c < tables.size(); ++c) fill(a.criteria[c], tables[c]);
  fill(a.overall, quality::pool({tables.begin(), tables.end()}));

  std::array<double, 5> sum{};
  std::array<std::size_t, 5> n{};
  for (const auto& s : scores) {
    for (std::size_t c = 0; c < 5; ++c) {
      if (s.scores[c] == quality::kInvalidRating) continue;
      sum[c] += s.scores[c];
      ++n[c];
    }
  }
  double total = 0;
  std::size_t total_n = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    if (n[c] > 0) a.criteria[c].mean = sum[c] / static_cast<double>(n[c]);
    total += sum[c];
    total_n += n[c];
  }
  if (total_n > 0) a.overall.mean = total / static_cast<double>(total_n);
  return a;
}

std::string agreement_to_json(const AgreementSummary& a) {
  auto crit = [](const CriterionAgreement& c) {
    return ordered_json{{"ac2", c.ac2 ? ordered_json(*c.ac2) : ordered_json(nullptr)},
                        {"items_used", c.items_used},
                        {"mean", c.mean ? ordered_json(*c.mean) : ordered_json(nullptr)}};
  };
  ordered_json j;
  j["raters"] = a.raters;
  j["items"] = a.items;
  ordered_json criteria;
  for (std::size_t c = 0; c < quality::kCriteria.size(); ++c) {
    criteria[std::string(quality::kCriteria[c])] = crit(a.criteria[c]);
  }
  j["criteria"] = std::move(criteria);
  j["overall"] = crit(a.overall);
  return j.dump();
}

std::string scores_to_csv(const std::vector<ScoreRecord>& scores) {
  std::map<std::string, std::pair<std::array<double, 5>, std::array<std::size_t, 5>>> per_rater;
  for (const auto& s : scores) {
    auto& [sum, n] = per_rater[s.rater];
    for (std::size_t c = 0; c < 5; ++c) {
      if (s.scores[c] == quality::kInvalidRating) continue;
      sum[c] += s.scores[c];
      ++n[c];
    }
  }

  std::string out = "rater";
  for (auto c : quality::kCriteria) out += "," + std::string(c);
  out += ",avg\n";

  std::array<double, 6> col_sum{};
  std::array<std::size_t, 6> col_n{};
  auto emit_row = [&](const std::string& name, const std::array<std::optional<double>, 6>& cells) {
    out += csv_field(name);
    for (const auto& v : cells) out += "," + (v ? fmt(*v) : std::string());
    out += "\n";
  };
  for (const auto& [rater, acc] : per_rater) {
    const auto& [sum, n] = acc;
    std::array<std::optional<double>, 6> row;
    double row_sum = 0;
    std::size_t row_n = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      if (n[c] == 0) continue;
      row[c] = sum[c] / static_cast<double>(n[c]);
      row_sum += *row[c];
      ++row_n;
    }
    if (row_n > 0) row[5] = row_sum / static_cast<double>(row_n);
    for (std::size_t c = 0; c < 6; ++c) {
      if (!row[c]) continue;
      col_sum[c] += *row[c];
      ++col_n[c];
    }
    emit_row(rater, row);
  }
  std::array<std::optional<double>, 6> avg;
  for (std::size_t c = 0; c < 6; ++c) {
    if (col_n[c] > 0) avg[c] = col_sum[c] / static_cast<double>(col_n[c]);
  }
  emit_row("AVG", avg);
  return out;
}

}  // namespace vqasynth::runner
