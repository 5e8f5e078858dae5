#include "commwatch/event.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace commwatch {

std::string_view to_string(EventSource src) {
  return src == EventSource::dns ? "dns" : "http";
}

bool is_ipv4_literal(std::string_view s) {
  int octets = 0;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t dot = s.find('.', pos);
    std::string_view part =
        s.substr(pos, dot == std::string_view::npos ? dot : dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int value = 0;
    for (char c : part) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      value = value * 10 + (c - '0');
    }
    if (value > 255) return false;
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
    if (pos > s.size()) return false;
  }
  return octets == 4;
}

void HostMap::add(const std::string& ip, std::int64_t start_ts,
                  std::int64_t end_ts, const std::string& host) {
  if (start_ts >= end_ts) throw std::invalid_argument("empty host-map range");
  auto& ranges = entries_[ip];
  for (const auto& r : ranges) {
    if (start_ts < r.end && r.start < end_ts)
      throw std::invalid_argument("overlapping host-map ranges for ip " + ip);
  }
  ranges.push_back({start_ts, end_ts, host});
}

std::optional<std::string> HostMap::resolve(const std::string& ip,
                                            std::int64_t ts) const {
  auto it = entries_.find(ip);
  if (it == entries_.end()) return std::nullopt;
  for (const auto& r : it->second) {
    if (ts >= r.start && ts < r.end) return r.host;
  }
  return std::nullopt;
}

HostMap HostMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open host map: " + path.string());
  HostMap map;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string ip, start, end, host;
    if (!std::getline(ss, ip, '\t') || !std::getline(ss, start, '\t') ||
        !std::getline(ss, end, '\t') || !std::getline(ss, host, '\t')) {
      throw std::runtime_error("bad host map line " + std::to_string(lineno));
    }
    map.add(ip, std::stoll(start), std::stoll(end), host);
  }
  return map;
}

void HostMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  for (const auto& [ip, ranges] : entries_) {
    for (const auto& r : ranges) {
      out << ip << '\t' << r.start << '\t' << r.end << '\t' << r.host << '\n';
    }
  }
}

namespace {

// Lowercase, strip scheme/path/port/trailing dot. Empty result or embedded
// whitespace is a parse failure signalled by returning nullopt.
std::optional<std::string> normalize_domain(std::string_view raw) {
  auto scheme = raw.find("://");
  if (scheme != std::string_view::npos) raw = raw.substr(scheme + 3);
  auto slash = raw.find('/');
  if (slash != std::string_view::npos) raw = raw.substr(0, slash);
  auto colon = raw.find(':');
  if (colon != std::string_view::npos) raw = raw.substr(0, colon);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && out.back() == '.') out.pop_back();
  if (out.empty()) return std::nullopt;
  return out;
}

ParseResult fail(std::string msg) {
  ParseResult r;
  r.status = ParseStatus::malformed;
  r.message = std::move(msg);
  return r;
}

}  // namespace

ParseResult parse_event_line(std::string_view line, EventSource dialect,
                             const HostMap& host_map) {
  Event ev;
  ev.source = dialect;
  bool have_ts = false, have_host = false, have_domain = false;
  std::string raw_host, raw_domain;

  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t tab = line.find('\t', pos);
    std::string_view field =
        line.substr(pos, tab == std::string_view::npos ? tab : tab - pos);
    if (!field.empty()) {
      std::size_t eq = field.find('=');
      if (eq == std::string_view::npos) return fail("field without '='");
      std::string_view key = field.substr(0, eq);
      std::string_view value = field.substr(eq + 1);
      if (key == "ts") {
        std::int64_t ts = 0;
        auto [p, ec] =
            std::from_chars(value.data(), value.data() + value.size(), ts);
        if (ec != std::errc{} || p != value.data() + value.size() || ts < 0)
          return fail("bad ts");
        ev.timestamp = ts;
        have_ts = true;
      } else if (key == "host") {
        raw_host = std::string(value);
        have_host = true;
      } else if (key == "domain") {
        raw_domain = std::string(value);
        have_domain = true;
      } else if (key == "ip") {
        if (!is_ipv4_literal(value)) return fail("bad dest ip");
        ev.dest_ip = std::string(value);
      } else if (key == "rtype") {
        ev.record_type = std::string(value);
      } else if (key == "ua") {
        ev.user_agent = std::string(value);
      } else if (key == "ref") {
        if (value == "1")
          ev.referer_present = true;
        else if (value == "0" || value.empty())
          ev.referer_present = false;
        else
          return fail("bad ref flag");
      } else if (key == "status") {
        int code = 0;
        auto [p, ec] =
            std::from_chars(value.data(), value.data() + value.size(), code);
        if (ec != std::errc{} || p != value.data() + value.size())
          return fail("bad status");
        ev.status_code = code;
      } else if (key == "src") {
        if (value != to_string(dialect)) return fail("src/dialect mismatch");
      } else {
        return fail("unknown key '" + std::string(key) + "'");
      }
    }
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }

  if (!have_ts || !have_host || !have_domain)
    return fail("missing required field (ts/host/domain)");
  if (raw_host.empty()) return fail("empty host");

  if (dialect == EventSource::dns) {
    if (ev.user_agent || ev.referer_present || ev.status_code)
      return fail("http metadata on dns record");
    if (!ev.record_type) return fail("dns record without rtype");
    if (*ev.record_type != "A") {
      ParseResult r;
      r.status = ParseStatus::skipped;
      return r;
    }
  } else {
    if (ev.record_type) return fail("rtype on http record");
    // A missing referer field means no referer was observed.
    if (!ev.referer_present) ev.referer_present = false;
  }

  auto dom = normalize_domain(raw_domain);
  if (!dom) return fail("unparsable domain");
  if (is_ipv4_literal(*dom)) {
    ParseResult r;
    r.status = ParseStatus::skipped;
    return r;
  }
  ev.domain = *dom;

  if (is_ipv4_literal(raw_host)) {
    auto resolved = host_map.resolve(raw_host, ev.timestamp);
    if (!resolved) {
      ParseResult r;
      r.status = ParseStatus::unresolved_host;
      r.message = "no host map entry for " + raw_host;
      return r;
    }
    ev.host = *resolved;
  } else {
    ev.host = raw_host;
  }

  ParseResult r;
  r.status = ParseStatus::ok;
  r.event = std::move(ev);
  return r;
}

std::string format_event_line(const Event& ev) {
  std::string out = "ts=" + std::to_string(ev.timestamp);
  out += "\thost=" + ev.host;
  out += "\tdomain=" + ev.domain;
  if (ev.dest_ip) out += "\tip=" + *ev.dest_ip;
  if (ev.record_type) out += "\trtype=" + *ev.record_type;
  if (ev.user_agent) out += "\tua=" + *ev.user_agent;
  if (ev.referer_present) out += std::string("\tref=") + (*ev.referer_present ? "1" : "0");
  if (ev.status_code) out += "\tstatus=" + std::to_string(*ev.status_code);
  out += "\tsrc=";
  out += to_string(ev.source);
  return out;
}

}  // namespace commwatch
