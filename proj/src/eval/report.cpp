#include "tcpid/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tcpid::eval {

using nlohmann::json;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t label_width(const std::vector<std::string>& labels, std::size_t min) {
  std::size_t w = min;
  for (const auto& l : labels) w = std::max(w, l.size());
  return w;
}

void pad(std::ostringstream& os, const std::string& s, std::size_t width, bool left = false) {
  if (left) os << s;
  for (std::size_t i = s.size(); i < width; ++i) os << ' ';
  if (!left) os << s;
}

json class_json(const ClassMetrics& c) {
  return {{"precision", c.precision}, {"recall", c.recall},     {"f1", c.f1},
          {"support", c.support},     {"precision_undefined", c.precision_undefined},
          {"recall_undefined", c.recall_undefined}, {"f1_undefined", c.f1_undefined}};
}

}  // namespace

std::string confusion_table(const ConfusionMatrix& cm) {
  const std::size_t lw = label_width(cm.labels, 10);
  std::size_t cw = 7;
  for (const auto& l : cm.labels) cw = std::max(cw, l.size() + 2);
  std::ostringstream os;
  pad(os, "true\\pred", lw, true);
  for (const auto& l : cm.labels) pad(os, l, cw);
  os << '\n';
  for (std::size_t r = 0; r < cm.classes(); ++r) {
    pad(os, cm.labels[r], lw, true);
    for (auto v : cm.counts[r]) pad(os, std::to_string(v), cw);
    os << '\n';
  }
  return os.str();
}

std::string metrics_table(const Metrics& m) {
  const std::size_t lw = label_width(m.labels, 12);
  std::ostringstream os;
  auto row = [&](const std::string& name, const ClassMetrics& c) {
    pad(os, name, lw, true);
    pad(os, fmt("%.3f", c.precision), 11);
    pad(os, fmt("%.3f", c.recall), 9);
    pad(os, fmt("%.3f", c.f1), 10);
    pad(os, std::to_string(c.support), 9);
    os << '\n';
  };
  pad(os, "", lw, true);
  pad(os, "precision", 11);
  pad(os, "recall", 9);
  pad(os, "f1-score", 10);
  pad(os, "support", 9);
  os << "\n\n";
  for (std::size_t k = 0; k < m.per_class.size(); ++k) row(m.labels[k], m.per_class[k]);
  os << '\n';
  pad(os, "accuracy", lw, true);
  pad(os, "", 20);
  pad(os, fmt("%.3f", m.accuracy), 10);
  pad(os, std::to_string(m.weighted.support), 9);
  os << '\n';
  row("macro avg", m.macro);
  row("weighted avg", m.weighted);
  return os.str();
}

std::string ablation_table(const std::vector<AblationRun>& runs) {
  if (runs.empty()) return "";
  const auto& labels = runs.front().confusion.labels;
  std::size_t kw = 8;
  for (const auto& r : runs) kw = std::max(kw, subset_key(r.channels).size());
  std::size_t cw = 9;
  for (const auto& l : labels) cw = std::max(cw, l.size() + 2);
  std::ostringstream os;
  pad(os, "features", kw, true);
  pad(os, "overall", cw);
  for (const auto& l : labels) pad(os, l, cw);
  os << '\n';
  for (const auto& r : runs) {
    pad(os, subset_key(r.channels), kw, true);
    pad(os, fmt("%.3f", r.accuracy), cw);
    for (double v : r.class_recall) pad(os, fmt("%.3f", v), cw);
    os << '\n';
  }
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true";
  for (const auto& l : cm.labels) os << ',' << l;
  os << '\n';
  for (std::size_t r = 0; r < cm.classes(); ++r) {
    os << cm.labels[r];
    for (auto v : cm.counts[r]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

std::string metrics_csv(const Metrics& m) {
  std::ostringstream os;
  os << "class,precision,recall,f1,support\n";
  auto row = [&](const std::string& name, const ClassMetrics& c) {
    os << name << ',' << fmt("%.17g", c.precision) << ',' << fmt("%.17g", c.recall) << ','
       << fmt("%.17g", c.f1) << ',' << c.support << '\n';
  };
  for (std::size_t k = 0; k < m.per_class.size(); ++k) row(m.labels[k], m.per_class[k]);
  row("macro avg", m.macro);
  row("weighted avg", m.weighted);
  os << "accuracy,,," << fmt("%.17g", m.accuracy) << ',' << m.weighted.support << '\n';
  return os.str();
}

std::string ablation_csv(const std::vector<AblationRun>& runs) {
  std::ostringstream os;
  os << "features,overall";
  if (!runs.empty()) {
    for (const auto& l : runs.front().confusion.labels) os << ',' << l;
  }
  os << '\n';
  for (const auto& r : runs) {
    os << subset_key(r.channels) << ',' << fmt("%.17g", r.accuracy);
    for (double v : r.class_recall) os << ',' << fmt("%.17g", v);
    os << '\n';
  }
  return os.str();
}

json to_json(const ConfusionMatrix& cm) {
  return {{"labels", cm.labels}, {"counts", cm.counts}};
}

json to_json(const Metrics& m) {
  json per = json::object();
  for (std::size_t k = 0; k < m.per_class.size(); ++k) per[m.labels[k]] = class_json(m.per_class[k]);
  return {{"labels", m.labels},
          {"per_class", per},
          {"accuracy", m.accuracy},
          {"macro", class_json(m.macro)},
          {"weighted", class_json(m.weighted)}};
}

json to_json(const std::vector<AblationRun>& runs) {
  json out = json::object();
  for (const auto& r : runs) {
    json recall = json::object();
    for (std::size_t k = 0; k < r.class_recall.size(); ++k) {
      recall[r.confusion.labels[k]] = r.class_recall[k];
    }
    out[subset_key(r.channels)] = {{"channels", r.channels},
                                   {"accuracy", r.accuracy},
                                   {"class_recall", recall},
                                   {"confusion", to_json(r.confusion)}};
  }
  return out;
}

}  // namespace tcpid::eval
