#include "evident/diff.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

namespace {

// A line plus whether it was newline-terminated in the source text. Only the
// final line of a text can carry nl == false; the flag participates in
// equality so a trailing-newline change shows up as a real edit.
struct Line {
  std::string text;
  bool nl = true;
  friend bool operator==(const Line&, const Line&) = default;
};

std::vector<Line> split_diff_lines(std::string_view s) {
  std::vector<Line> out;
  size_t start = 0;
  while (start < s.size()) {
    size_t pos = s.find('\n', start);
    if (pos == std::string_view::npos) {
      out.push_back({std::string(s.substr(start)), false});
      break;
    }
    out.push_back({std::string(s.substr(start, pos - start)), true});
    start = pos + 1;
  }
  return out;
}

enum class EditOp { keep, del, ins };

struct Edit {
  EditOp op;
  Line line;
};

// Myers O(ND) greedy diff over line vectors.
std::vector<Edit> myers(const std::vector<Line>& a, const std::vector<Line>& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int max = n + m;
  if (max == 0) return {};

  std::vector<std::vector<int>> trace;
  std::vector<int> v(2 * max + 1, 0);
  int d_final = -1;
  for (int d = 0; d <= max; ++d) {
    trace.push_back(v);
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[k - 1 + max] < v[k + 1 + max]))
        x = v[k + 1 + max];
      else
        x = v[k - 1 + max] + 1;
      int y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[k + max] = x;
      if (x >= n && y >= m) {
        d_final = d;
        break;
      }
    }
    if (d_final >= 0) break;
  }

  // Backtrack from (n, m) through the stored frontiers.
  std::vector<Edit> edits;
  int x = n, y = m;
  for (int d = d_final; d > 0; --d) {
    const auto& pv = trace[d];
    int k = x - y;
    int prev_k;
    if (k == -d || (k != d && pv[k - 1 + max] < pv[k + 1 + max]))
      prev_k = k + 1;
    else
      prev_k = k - 1;
    int prev_x = pv[prev_k + max];
    int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      edits.push_back({EditOp::keep, a[x - 1]});
      --x;
      --y;
    }
    if (x == prev_x) {
      edits.push_back({EditOp::ins, b[prev_y]});
    } else {
      edits.push_back({EditOp::del, a[prev_x]});
    }
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    edits.push_back({EditOp::keep, a[x - 1]});
    --x;
    --y;
  }
  std::reverse(edits.begin(), edits.end());
  return edits;
}

}  // namespace

std::string unified_diff(std::string_view before, std::string_view after,
                         const std::string& before_label, const std::string& after_label,
                         int context) {
  if (before == after) return "";
  auto a = split_diff_lines(before);
  auto b = split_diff_lines(after);
  auto edits = myers(a, b);

  std::ostringstream out;
  out << "--- " << before_label << "\n+++ " << after_label << "\n";

  const int n = static_cast<int>(edits.size());
  int a_line = 1, b_line = 1;
  int i = 0;
  while (i < n) {
    // skip the common run before the next change
    int run = i;
    while (run < n && edits[run].op == EditOp::keep) ++run;
    if (run == n) break;

    int hunk_begin = std::max(i, run - context);
    a_line += hunk_begin - i;
    b_line += hunk_begin - i;

    // extend the hunk over changes separated by at most 2*context keeps
    int j = run;
    int last_change = run;
    while (j < n) {
      if (edits[j].op != EditOp::keep) {
        last_change = j;
        ++j;
        continue;
      }
      int keep_run = j;
      while (keep_run < n && edits[keep_run].op == EditOp::keep) ++keep_run;
      if (keep_run < n && keep_run - j <= 2 * context) {
        j = keep_run;
      } else {
        break;
      }
    }
    int hunk_end = std::min(n, last_change + 1 + context);

    int a_count = 0, b_count = 0;
    for (int k = hunk_begin; k < hunk_end; ++k) {
      if (edits[k].op != EditOp::ins) ++a_count;
      if (edits[k].op != EditOp::del) ++b_count;
    }
    out << "@@ -" << (a_count == 0 ? a_line - 1 : a_line);
    if (a_count != 1) out << "," << a_count;
    out << " +" << (b_count == 0 ? b_line - 1 : b_line);
    if (b_count != 1) out << "," << b_count;
    out << " @@\n";
    auto put = [&out](char tag, const Line& l) {
      out << tag << l.text << '\n';
      if (!l.nl) out << "\\ No newline at end of file\n";
    };
    for (int k = hunk_begin; k < hunk_end; ++k) {
      switch (edits[k].op) {
        case EditOp::keep:
          put(' ', edits[k].line);
          ++a_line;
          ++b_line;
          break;
        case EditOp::del:
          put('-', edits[k].line);
          ++a_line;
          break;
        case EditOp::ins:
          put('+', edits[k].line);
          ++b_line;
          break;
      }
    }
    i = hunk_end;
  }
  return out.str();
}

std::string truncate_diff(const std::string& diff, int max_lines) {
  auto lines = split_lines(diff);
  if (static_cast<int>(lines.size()) <= max_lines) return diff;
  lines.resize(static_cast<size_t>(max_lines));
  lines.push_back("[truncated]");
  return join_lines(lines);
}

std::string apply_unified_diff(std::string_view original, const std::string& diff) {
  if (diff.empty()) return std::string(original);
  auto src = split_diff_lines(original);
  auto dlines = split_lines(diff);
  std::vector<Line> out;
  size_t src_pos = 0;  // 0-based index into src
  char prev_tag = 0;   // tag of the last hunk body line, for "\" markers

  size_t i = 0;
  while (i < dlines.size() && (starts_with(dlines[i], "---") || starts_with(dlines[i], "+++")))
    ++i;
  for (; i < dlines.size(); ++i) {
    const std::string& l = dlines[i];
    if (starts_with(l, "@@")) {
      // parse "@@ -a[,n] +b[,m] @@"
      int a_start = 0, a_count = 1;
      int matched = std::sscanf(l.c_str(), "@@ -%d,%d", &a_start, &a_count);
      if (matched < 1) raise(ErrorCode::precondition, "malformed hunk header: " + l);
      if (matched == 1) a_count = 1;
      size_t target = a_count == 0 ? static_cast<size_t>(a_start)
                                   : static_cast<size_t>(a_start > 0 ? a_start - 1 : 0);
      if (target < src_pos || target > src.size())
        raise(ErrorCode::precondition, "hunk out of order: " + l);
      while (src_pos < target) out.push_back(src[src_pos++]);
      prev_tag = 0;
      continue;
    }
    if (l.empty()) continue;
    char tag = l[0];
    std::string body = l.substr(1);
    switch (tag) {
      case ' ':
        if (src_pos >= src.size() || src[src_pos].text != body)
          raise(ErrorCode::precondition, "context mismatch at line " + std::to_string(src_pos + 1));
        out.push_back(src[src_pos]);
        ++src_pos;
        break;
      case '-':
        if (src_pos >= src.size() || src[src_pos].text != body)
          raise(ErrorCode::precondition, "deletion mismatch at line " + std::to_string(src_pos + 1));
        ++src_pos;
        break;
      case '+':
        out.push_back({body, true});
        break;
      case '\\':  // "\ No newline at end of file": annotates the preceding line
        if (prev_tag != '-' && !out.empty()) out.back().nl = false;
        continue;  // keep prev_tag pointing at the annotated line
      default:
        raise(ErrorCode::precondition, "unexpected diff line: " + l);
    }
    prev_tag = tag;
  }
  while (src_pos < src.size()) out.push_back(src[src_pos++]);

  std::string res;
  for (const auto& l : out) {
    res += l.text;
    if (l.nl) res += '\n';
  }
  return res;
}

}  // namespace evident
