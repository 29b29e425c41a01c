#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "json_writer.hpp"
#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"

namespace oxdr::analysis {
namespace {

using json = nlohmann::json;

DemographicsResponse response_from_json(const json& j) {
  auto str = [&](const char* k) { return j.at(k).get<std::string>(); };
  auto integer = [&](const char* k) {
    const auto& v = j.at(k);
    if (!v.is_number_integer()) throw std::invalid_argument(std::string(k) + " must be an integer");
    return v.get<std::int64_t>();
  };
  DemographicsResponse r;
  r.participant_id = str("participant_id");
  r.age_years = integer("age_years");
  const auto gender = str("gender");
  auto g = parse_gender(gender);
  if (!g) throw std::invalid_argument("unknown gender '" + gender + "'");
  r.gender = *g;
  if (auto it = j.find("gender_text"); it != j.end() && !it->is_null())
    r.gender_text = it->get<std::string>();
  r.native_language = str("native_language");
  r.vision_correction = j.at("vision_correction").get<bool>();
  r.vr_experience = integer("vr_experience");
  if (auto bad = check(r)) throw std::invalid_argument(*bad);
  return r;
}

}  // namespace

std::vector<DemographicsResponse> read_responses(std::istream& in) {
  std::vector<DemographicsResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(response_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::malformed_record,
                  "responses line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string encode_response(const DemographicsResponse& r) {
  std::string out;
  detail::JsonWriter w(out);
  w.begin_map(7);
  w.key("participant_id");
  w.string(r.participant_id);
  w.key("age_years");
  w.integer(r.age_years);
  w.key("gender");
  w.string(to_string(r.gender));
  w.key("gender_text");
  w.string(r.gender_text);
  w.key("native_language");
  w.string(r.native_language);
  w.key("vision_correction");
  w.boolean(r.vision_correction);
  w.key("vr_experience");
  w.integer(r.vr_experience);
  w.end_map();
  out += '\n';
  return out;
}

JoinResult match_participant(std::string_view participant_id,
                             std::span<const DemographicsResponse> responses) {
  if (participant_id.empty())
    throw Error(ErrorCode::missing_participant, "recording has no participant_id to join on");
  JoinResult result{std::string(participant_id), std::nullopt};
  for (const auto& r : responses) {
    if (r.participant_id != participant_id) continue;
    if (result.response)
      throw Error(ErrorCode::ambiguous_participant,
                  "more than one response for participant '" + std::string(participant_id) + "'");
    result.response = r;
  }
  return result;
}

JoinResult join_questionnaire(ResampledTable& table,
                              std::span<const DemographicsResponse> responses) {
  auto join = match_participant(table.metadata.participant_id, responses);
  const auto rows = table.rows();
  auto add = [&](std::string name, Cell value) {
    Column col;
    col.name = std::move(name);
    col.cells.assign(rows, value);
    table.columns.push_back(std::move(col));
  };
  add("participant_id", join.participant_id);
  add("demographics.status", std::string(join.matched() ? "matched" : "unmatched"));
  const auto* r = join.response ? &*join.response : nullptr;
  add("demographics.age_years", r ? Cell{r->age_years} : Cell{});
  add("demographics.gender", r ? Cell{std::string(to_string(r->gender))} : Cell{});
  add("demographics.gender_text",
      r && !r->gender_text.empty() ? Cell{r->gender_text} : Cell{});
  add("demographics.native_language", r ? Cell{r->native_language} : Cell{});
  add("demographics.vision_correction", r ? Cell{r->vision_correction} : Cell{});
  add("demographics.vr_experience", r ? Cell{r->vr_experience} : Cell{});
  return join;
}

AnnotatedSummary join_questionnaire(SessionSummary summary,
                                    std::span<const DemographicsResponse> responses) {
  auto join = match_participant(summary.metadata.participant_id, responses);
  return {std::move(summary), std::move(join)};
}

std::string format_join(const JoinResult& join) {
  std::ostringstream out;
  out << "participant: " << join.participant_id << "\n";
  if (!join.matched()) {
    out << "demographics: unmatched\n";
    return out.str();
  }
  const auto& r = *join.response;
  out << "demographics: matched\n"
      << "  age_years: " << r.age_years << "\n"
      << "  gender: " << to_string(r.gender);
  if (!r.gender_text.empty()) out << " (" << r.gender_text << ")";
  out << "\n"
      << "  native_language: " << r.native_language << "\n"
      << "  vision_correction: " << (r.vision_correction ? "yes" : "no") << "\n"
      << "  vr_experience: " << r.vr_experience << " / " << kVrExperienceMax << "\n";
  return out.str();
}

}  // namespace oxdr::analysis
