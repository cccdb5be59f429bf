#include "c2f/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "c2f/error.hpp"

namespace c2f {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

// Left-justifies to a display width; counts UTF-8 code points, not bytes.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t shown = 0;
  for (unsigned char ch : s) shown += (ch & 0xC0) != 0x80;
  return s + std::string(width > shown ? width - shown : 1, ' ');
}

// nlohmann::ordered_json dumps doubles with round-trip precision; reports
// carry pre-rounded strings converted back so output stays fixed-width.
nlohmann::ordered_json num(double v) { return nlohmann::ordered_json::parse(fixed6(v)); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

nlohmann::ordered_json summary_json(const Summary& s) {
  return {{"mean", num(s.mean)}, {"std", num(s.std)}, {"max", num(s.max)}, {"min", num(s.min)}};
}

}  // namespace

std::string format_report_text(const Evaluation& ev) {
  std::ostringstream os;
  os << "# case_id coarse_dsc fine_dsc verdict\n";
  for (const auto& s : ev.scores) {
    os << s.case_id << " " << fixed6(s.coarse_dsc) << " " << fixed6(s.fine_dsc) << " " << s.verdict
       << "\n";
  }
  os << "\n# errors: " << ev.failures.size() << "\n";
  for (const auto& f : ev.failures) os << f.case_id << ": " << f.message << "\n";
  os << "\n";
  if (!ev.has_summary) {
    os << "no scored cases\n";
    return os.str();
  }
  os << pad("", 8) << pad("Mean ± STD [%]", 18) << pad("Max [%]", 9) << "Min [%]\n";
  for (const auto& [name, s] : {std::pair{"Coarse", ev.coarse}, std::pair{"Fine", ev.fine}}) {
    os << pad(name, 8) << pad(pct(s.mean) + " ± " + pct(s.std), 18) << pad(pct(s.max), 9) << pct(s.min)
       << "\n";
  }
  return os.str();
}

std::string format_report_json(const Evaluation& ev) {
  nlohmann::ordered_json j;
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& s : ev.scores) {
    j["cases"].push_back({{"case_id", s.case_id},
                          {"coarse_dsc", num(s.coarse_dsc)},
                          {"fine_dsc", num(s.fine_dsc)},
                          {"verdict", s.verdict}});
  }
  j["errors"] = nlohmann::ordered_json::array();
  for (const auto& f : ev.failures) j["errors"].push_back({{"case_id", f.case_id}, {"message", f.message}});
  if (ev.has_summary) {
    j["summary"] = {{"coarse", summary_json(ev.coarse)}, {"fine", summary_json(ev.fine)}};
  } else {
    j["summary"] = nullptr;
  }
  return j.dump(2) + "\n";
}

void write_report(const Evaluation& ev, const std::string& path) {
  write_text(path, format_report_text(ev));
  write_text(path + ".json", format_report_json(ev));
}

std::string format_case_report(const std::string& case_id, const CaseResult& r) {
  nlohmann::ordered_json j;
  j["case_id"] = case_id;
  j["verdict"] = to_string(r.verdict.verdict);
  j["n_kidney"] = r.verdict.n_kidney;
  j["coarse_voxels"] = r.coarse_mask.foreground_count();
  j["guidance_voxels"] = r.guidance.foreground_count();
  j["fine_voxels"] = r.fine_mask.foreground_count();
  j["flags"] = r.flags;
  return j.dump(2) + "\n";
}

void write_case_report(const std::string& case_id, const CaseResult& r, const std::string& path) {
  write_text(path, format_case_report(case_id, r));
}

std::string read_case_verdict(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    return j.at("verdict").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace c2f
