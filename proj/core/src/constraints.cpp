#include "ivnsim/constraints.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "ivnsim/error.hpp"

namespace ivn {

namespace {

// Minimal XML reader for the constraint dialect: elements, attributes and
// text content only. No namespaces, comments are skipped, entities are the
// five predefined ones.
struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;
  std::vector<XmlNode> children;
};

class XmlParser {
 public:
  explicit XmlParser(const std::string& src) : src_(src) {}

  XmlNode parse() {
    skip_prolog();
    XmlNode root = parse_element();
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw SimError(ErrorCode::Config, "constraint XML: " + msg + " near offset " +
                                          std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  void skip_prolog() {
    skip_ws();
    while (pos_ + 1 < src_.size() && src_[pos_] == '<' &&
           (src_[pos_ + 1] == '?' || src_[pos_ + 1] == '!')) {
      const auto end = src_.find('>', pos_);
      if (end == std::string::npos) fail("unterminated prolog");
      pos_ = end + 1;
      skip_ws();
    }
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
            src_[pos_] == '-' || src_[pos_] == ':')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected name");
    return src_.substr(start, pos_ - start);
  }

  std::string decode(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '&') {
        out.push_back(s[i]);
        continue;
      }
      const auto semi = s.find(';', i);
      const std::string ent = semi == std::string::npos ? "" : s.substr(i + 1, semi - i - 1);
      if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "amp") out.push_back('&');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else { out.push_back('&'); continue; }
      i = semi;
    }
    return out;
  }

  XmlNode parse_element() {
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != '<') fail("expected element");
    ++pos_;
    XmlNode node;
    node.name = parse_name();
    while (true) {
      skip_ws();
      if (pos_ >= src_.size()) fail("unterminated tag");
      if (src_[pos_] == '/') {
        if (pos_ + 1 >= src_.size() || src_[pos_ + 1] != '>') fail("bad empty tag");
        pos_ += 2;
        return node;
      }
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      const std::string attr = parse_name();
      skip_ws();
      if (pos_ >= src_.size() || src_[pos_] != '=') fail("expected '='");
      ++pos_;
      skip_ws();
      if (pos_ >= src_.size() || (src_[pos_] != '"' && src_[pos_] != '\'')) fail("expected quote");
      const char quote = src_[pos_++];
      const auto end = src_.find(quote, pos_);
      if (end == std::string::npos) fail("unterminated attribute");
      node.attrs[attr] = decode(src_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
    // content: text and child elements until the closing tag
    while (true) {
      const auto lt = src_.find('<', pos_);
      if (lt == std::string::npos) fail("unterminated element " + node.name);
      node.text += decode(src_.substr(pos_, lt - pos_));
      pos_ = lt;
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        pos_ += 2;
        const std::string close = parse_name();
        if (close != node.name) fail("mismatched close tag " + close);
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != '>') fail("expected '>'");
        ++pos_;
        return node;
      }
      if (pos_ + 3 < src_.size() && src_.compare(pos_, 4, "<!--") == 0) {
        const auto end = src_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      node.children.push_back(parse_element());
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

double to_double(const XmlNode& n) {
  std::string t = n.text;
  std::size_t a = t.find_first_not_of(" \t\r\n");
  std::size_t b = t.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) {
    throw SimError(ErrorCode::Config, "constraint <" + n.name + "> has no value");
  }
  t = t.substr(a, b - a + 1);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw SimError(ErrorCode::Config, "constraint <" + n.name + ">: bad number '" + t + "'");
  }
}

SimTime parse_window(const XmlNode& n) {
  auto it = n.attrs.find("window");
  if (it == n.attrs.end()) {
    throw SimError(ErrorCode::Config, "constraint <" + n.name + "> needs window=");
  }
  // window is seconds (fractions allowed) or a value with ns/us/ms/s suffix
  const std::string& w = it->second;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(w, &used);
  } catch (const std::exception&) {
    throw SimError(ErrorCode::Config, "bad window '" + w + "'");
  }
  const std::string unit = w.substr(used);
  double scale = 1e12;  // bare number: seconds
  if (unit == "ns") scale = 1e3;
  else if (unit == "us") scale = 1e6;
  else if (unit == "ms") scale = 1e9;
  else if (unit == "s" || unit.empty()) scale = 1e12;
  else throw SimError(ErrorCode::Config, "bad window unit '" + unit + "'");
  return SimTime::ps(static_cast<std::int64_t>(v * scale));
}

std::uint32_t parse_samples(const XmlNode& n) {
  auto it = n.attrs.find("samples");
  if (it == n.attrs.end()) {
    throw SimError(ErrorCode::Config, "constraint <" + n.name + "> needs samples=");
  }
  const long v = std::strtol(it->second.c_str(), nullptr, 10);
  if (v < 1) throw SimError(ErrorCode::Config, "samples must be >= 1");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<ConstraintRule> parse_constraints_xml(const std::string& xml) {
  XmlParser parser(xml);
  const XmlNode root = parser.parse();
  if (root.name != "constraints") {
    throw SimError(ErrorCode::Config, "root element must be <constraints>");
  }
  std::vector<ConstraintRule> rules;
  for (const auto& c : root.children) {
    if (c.name != "constraint") {
      throw SimError(ErrorCode::Config, "unexpected element <" + c.name + ">");
    }
    ConstraintRule rule;
    auto attr = [&](const char* k) -> std::string {
      auto it = c.attrs.find(k);
      return it == c.attrs.end() ? std::string() : it->second;
    };
    rule.module_pattern = attr("module");
    rule.name_pattern = attr("name");
    rule.module_is_regex = attr("moduleIsRegex") == "true";
    rule.name_is_regex = attr("nameIsRegex") == "true";
    const std::string action = attr("action");
    if (action == "stop") rule.action = ConstraintAction::Stop;
    else if (!action.empty() && action != "report") {
      throw SimError(ErrorCode::Config, "bad action '" + action + "'");
    }
    bool any_bound = false;
    for (const auto& b : c.children) {
      any_bound = true;
      if (b.name == "min") rule.min = to_double(b);
      else if (b.name == "max") rule.max = to_double(b);
      else if (b.name == "avg_min") { rule.avg_min = to_double(b); rule.avg_min_samples = parse_samples(b); }
      else if (b.name == "avg_max") { rule.avg_max = to_double(b); rule.avg_max_samples = parse_samples(b); }
      else if (b.name == "interval_min") { rule.interval_min = to_double(b); rule.interval_min_window = parse_window(b); }
      else if (b.name == "interval_max") { rule.interval_max = to_double(b); rule.interval_max_window = parse_window(b); }
      else if (b.name == "sum_max") rule.sum_max = to_double(b);
      else throw SimError(ErrorCode::Config, "unknown bound <" + b.name + ">");
    }
    if (!any_bound) {
      throw SimError(ErrorCode::Config, "constraint without bounds");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ConstraintRule> load_constraints_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorCode::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_constraints_xml(buf.str());
}

ConstraintChecker::ConstraintChecker(std::vector<ConstraintRule> rules)
    : rules_(std::move(rules)) {
  states_.resize(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    try {
      if (rules_[i].module_is_regex) states_[i].module_re = std::regex(rules_[i].module_pattern);
      if (rules_[i].name_is_regex) states_[i].name_re = std::regex(rules_[i].name_pattern);
    } catch (const std::regex_error& e) {
      throw SimError(ErrorCode::Config, "bad constraint pattern: " + std::string(e.what()));
    }
  }
}

bool ConstraintChecker::matches(std::size_t i, const std::string& module,
                                const std::string& metric) const {
  const auto& r = rules_[i];
  const auto& s = states_[i];
  const bool m_ok = r.module_is_regex ? std::regex_match(module, s.module_re)
                                      : (r.module_pattern.empty() || r.module_pattern == module);
  if (!m_ok) return false;
  return r.name_is_regex ? std::regex_match(metric, s.name_re)
                         : (r.name_pattern.empty() || r.name_pattern == metric);
}

bool ConstraintChecker::sample(const std::string& module, const std::string& metric,
                               double value, SimTime t) {
  bool stop_now = false;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (!matches(i, module, metric)) continue;
    const auto& r = rules_[i];
    auto& st = states_[i];
    auto violate = [&](const char* bound, double v, double limit) {
      ConstraintViolation viol{i, module, metric, bound, v, limit, t,
                               r.action == ConstraintAction::Stop};
      violations_.push_back(viol);
      if (viol.stop) {
        stop_ = true;
        stop_now = true;
      }
    };

    if (r.min && value < *r.min) violate("min", value, *r.min);
    if (r.max && value > *r.max) violate("max", value, *r.max);

    if (r.avg_min || r.avg_max) {
      st.window.push_back(value);
      const std::size_t need = std::max(r.avg_min_samples, r.avg_max_samples);
      if (st.window.size() > need) st.window.pop_front();
      auto window_mean = [&](std::uint32_t n) {
        double sum = 0;
        for (std::size_t k = st.window.size() - n; k < st.window.size(); ++k) sum += st.window[k];
        return sum / n;
      };
      if (r.avg_min && st.window.size() >= r.avg_min_samples) {
        const double m = window_mean(r.avg_min_samples);
        if (m < *r.avg_min) violate("avg_min", m, *r.avg_min);
      }
      if (r.avg_max && st.window.size() >= r.avg_max_samples) {
        const double m = window_mean(r.avg_max_samples);
        if (m > *r.avg_max) violate("avg_max", m, *r.avg_max);
      }
    }

    if (r.interval_min || r.interval_max) {
      st.timed.emplace_back(t, value);
      const SimTime horizon = std::max(r.interval_min_window, r.interval_max_window);
      while (!st.timed.empty() && st.timed.front().first + horizon < t) st.timed.pop_front();
      auto timed_mean = [&](SimTime window) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& [ts, v] : st.timed) {
          if (ts + window >= t) {
            sum += v;
            ++n;
          }
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
      };
      if (r.interval_min && t >= r.interval_min_window) {
        const double m = timed_mean(r.interval_min_window);
        if (m < *r.interval_min) violate("interval_min", m, *r.interval_min);
      }
      if (r.interval_max && t >= r.interval_max_window) {
        const double m = timed_mean(r.interval_max_window);
        if (m > *r.interval_max) violate("interval_max", m, *r.interval_max);
      }
    }

    if (r.sum_max) {
      st.running_sum += value;
      if (st.running_sum > *r.sum_max) violate("sum_max", st.running_sum, *r.sum_max);
    }
  }
  return stop_now;
}

}  // namespace ivn
