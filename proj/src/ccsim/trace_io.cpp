#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tcpid/ccsim/trace.hpp"

namespace tcpid::ccsim {

using nlohmann::json;

namespace {

constexpr const char* kBaseHeader = "rx_time,tx_time,size,seq_end,ack_sent";
constexpr const char* kRadioHeader = "rx_time,tx_time,size,seq_end,ack_sent,rlc_buffer,pdcp_delay";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceFormatError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceFormatError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

}  // namespace

bool FlowTrace::has_radio_channels() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (!r.rlc_buffer || !r.pdcp_delay) return false;
  }
  return true;
}

std::string trace_to_csv(const FlowTrace& trace) {
  const bool radio = trace.has_radio_channels();
  std::string out = radio ? kRadioHeader : kBaseHeader;
  out += '\n';
  char buf[256];
  for (const auto& r : trace.records) {
    int n = std::snprintf(buf, sizeof buf, "%.9f,%.9f,%lld,%lld,%lld", r.rx_time, r.tx_time,
                          static_cast<long long>(r.size), static_cast<long long>(r.seq_end),
                          static_cast<long long>(r.ack_sent));
    out.append(buf, static_cast<std::size_t>(n));
    if (radio) {
      n = std::snprintf(buf, sizeof buf, ",%.0f,%.9f", *r.rlc_buffer, *r.pdcp_delay);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

std::vector<PacketRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool radio = false;
  if (line == kRadioHeader) {
    radio = true;
  } else if (line != kBaseHeader) {
    throw TraceFormatError("unexpected header '" + line + "'");
  }
  const std::size_t expected = radio ? 7 : 5;

  std::vector<PacketRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != expected) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " +
                             std::to_string(f.size()));
    }
    PacketRecord r;
    r.rx_time = parse_double(f[0], line_no);
    r.tx_time = parse_double(f[1], line_no);
    r.size = parse_int(f[2], line_no);
    r.seq_end = parse_int(f[3], line_no);
    r.ack_sent = parse_int(f[4], line_no);
    if (radio) {
      r.rlc_buffer = parse_double(f[5], line_no);
      r.pdcp_delay = parse_double(f[6], line_no);
    }
    if (!records.empty() && r.rx_time < records.back().rx_time) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": rx_time goes backwards");
    }
    records.push_back(r);
  }
  return records;
}

std::string trace_sidecar_json(const FlowTrace& trace) {
  json j;
  j["version"] = 1;
  j["label"] = std::string(to_string(trace.label));
  j["class_id"] = class_id(trace.label);
  j["seed"] = trace.seed;
  j["duration"] = trace.duration;
  j["records"] = trace.records.size();
  json link = {{"rate_bps", trace.link.rate_bps}, {"prop_rtt", trace.link.prop_rtt},
               {"buffer", trace.link.buffer},     {"mtu", trace.link.mtu},
               {"random_loss", trace.link.random_loss}, {"wireless", trace.link.wireless}};
  j["scenario"]["link"] = link;
  if (trace.radio) {
    j["scenario"]["radio"] = {{"rlc_cap", trace.radio->rlc_cap},
                              {"service_time", trace.radio->service_time},
                              {"max_retx", trace.radio->max_retx}};
  }
  return j.dump(2) + "\n";
}

void write_trace(const FlowTrace& trace, const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto side = stem;
  side += ".json";
  write_file(csv, trace_to_csv(trace));
  write_file(side, trace_sidecar_json(trace));
}

FlowTrace read_trace(const std::filesystem::path& csv_path,
                     std::optional<CcAlgorithm> fallback_label) {
  FlowTrace trace;
  trace.records = records_from_csv(read_file(csv_path));
  auto side = csv_path;
  side.replace_extension(".json");
  if (std::filesystem::exists(side)) {
    json j;
    try {
      j = json::parse(read_file(side));
      const auto label = parse_algorithm(j.at("label").get<std::string>());
      if (!label) throw TraceFormatError("unknown label in " + side.string());
      trace.label = *label;
      trace.seed = j.value("seed", std::uint64_t{0});
      trace.duration = j.value("duration", 0.0);
      const auto& link = j.at("scenario").at("link");
      trace.link.rate_bps = link.at("rate_bps").get<double>();
      trace.link.prop_rtt = link.at("prop_rtt").get<double>();
      trace.link.buffer = link.at("buffer").get<int>();
      trace.link.mtu = link.value("mtu", 1500);
      trace.link.random_loss = link.value("random_loss", 0.0);
      trace.link.wireless = link.value("wireless", false);
      if (j["scenario"].contains("radio")) {
        const auto& r = j["scenario"]["radio"];
        RadioConfig rc;
        rc.rlc_cap = r.value("rlc_cap", rc.rlc_cap);
        rc.service_time = r.value("service_time", rc.service_time);
        rc.max_retx = r.value("max_retx", rc.max_retx);
        trace.radio = rc;
      }
    } catch (const json::exception& e) {
      throw TraceFormatError("bad sidecar " + side.string() + ": " + e.what());
    }
  } else if (fallback_label) {
    trace.label = *fallback_label;
  } else {
    throw TraceFormatError("missing sidecar " + side.string());
  }
  if (trace.duration <= 0.0 && !trace.records.empty()) {
    trace.duration = trace.records.back().rx_time;
  }
  return trace;
}

}  // namespace tcpid::ccsim
