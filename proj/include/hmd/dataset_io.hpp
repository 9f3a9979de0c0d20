#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmd/csv.hpp"
#include "hmd/errors.hpp"
#include "hmd/graph.hpp"

namespace hmd {

/// Hate probability of one post, attached to its author.
struct PostScore {
  std::string post_id;
  std::string user_id;
  double score = 0.0;
  std::optional<std::string> text;

  bool operator==(const PostScore&) const = default;
};

struct UserLabel {
  std::string user_id;
  int label = 0;  // 1 = hate-monger

  bool operator==(const UserLabel&) const = default;
};

/// Graph plus per-node post scores and gold labels. All per-node vectors
/// are indexed by NodeId; post order within a user is file order.
struct Dataset {
  UserGraph graph;
  std::vector<std::vector<double>> scores;
  /// Per-node post ids parallel to `scores`. May be empty, in which case
  /// writers synthesize ids of the form `<user>_p<j>`.
  std::vector<std::vector<std::string>> post_ids;
  /// -1 unlabeled, otherwise 0 or 1.
  std::vector<std::int8_t> labels;

  std::vector<NodeId> labeled_nodes() const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < labels.size(); ++u) {
      if (labels[u] >= 0) out.push_back(u);
    }
    return out;
  }

  std::size_t post_count() const {
    std::size_t n = 0;
    for (const auto& s : scores) n += s.size();
    return n;
  }

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string json_string(const std::string& s) {
  for (unsigned char c : s) {
    if (c < 0x20 || c == '"' || c == '\\' || c >= 0x80) return nlohmann::json(s).dump();
  }
  return "\"" + s + "\"";
}

}  // namespace detail

/// Reads JSONL post scores (`post_id`, `user_id`, `score`, optional `text`).
inline std::vector<PostScore> load_post_scores(const std::string& path) {
  csv::LineReader reader(path);
  std::vector<PostScore> out;
  std::string line;
  while (reader.next(line)) {
    const auto line_no = reader.line_no();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw Error(ErrorKind::kParse, "record is not a JSON object", line_no);
    auto require_string = [&](const char* key) -> std::string {
      const auto it = j.find(key);
      if (it == j.end() || !it->is_string()) {
        throw Error(ErrorKind::kValidation, std::string("missing string field '") + key + "'",
                    line_no);
      }
      return it->get<std::string>();
    };
    PostScore p;
    p.post_id = require_string("post_id");
    p.user_id = require_string("user_id");
    if (p.user_id.empty()) throw Error(ErrorKind::kValidation, "empty user_id", line_no);
    const auto score = j.find("score");
    if (score == j.end() || !score->is_number()) {
      throw Error(ErrorKind::kValidation, "missing numeric field 'score'", line_no);
    }
    p.score = score->get<double>();
    if (!(p.score >= 0.0 && p.score <= 1.0)) {
      throw Error(ErrorKind::kValidation,
                  "score " + detail::format_double(p.score) + " outside [0,1]", line_no);
    }
    if (const auto text = j.find("text"); text != j.end() && !text->is_null()) {
      if (!text->is_string()) throw Error(ErrorKind::kValidation, "'text' must be a string", line_no);
      p.text = text->get<std::string>();
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Reads a `src,dst` edge CSV; direction is follower -> followee.
inline std::vector<Edge> load_edges(const std::string& path) {
  csv::LineReader reader(path);
  csv::expect_header(reader, "src,dst");
  std::vector<Edge> out;
  std::string line;
  while (reader.next(line)) {
    auto fields = csv::split(line, reader.line_no());
    if (fields.size() != 2) {
      throw Error(ErrorKind::kFormat,
                  "expected 2 fields, found " + std::to_string(fields.size()), reader.line_no());
    }
    out.push_back({std::move(fields[0]), std::move(fields[1]), reader.line_no()});
  }
  return out;
}

inline std::vector<UserLabel> load_labels(const std::string& path) {
  csv::LineReader reader(path);
  csv::expect_header(reader, "user_id,label");
  std::vector<UserLabel> out;
  std::unordered_set<std::string> seen;
  std::string line;
  while (reader.next(line)) {
    auto fields = csv::split(line, reader.line_no());
    if (fields.size() != 2) {
      throw Error(ErrorKind::kFormat,
                  "expected 2 fields, found " + std::to_string(fields.size()), reader.line_no());
    }
    if (fields[0].empty()) throw Error(ErrorKind::kValidation, "empty user_id", reader.line_no());
    if (fields[1] != "0" && fields[1] != "1") {
      throw Error(ErrorKind::kValidation, "label '" + fields[1] + "' is not 0 or 1",
                  reader.line_no());
    }
    if (!seen.insert(fields[0]).second) {
      throw Error(ErrorKind::kDuplicate, "duplicate label for user '" + fields[0] + "'",
                  reader.line_no());
    }
    out.push_back({std::move(fields[0]), fields[1] == "1" ? 1 : 0});
  }
  return out;
}

/// Joins the three inputs. Users seen only in posts or labels become
/// isolated nodes.
inline Dataset make_dataset(std::span<const Edge> edges, std::span<const PostScore> posts,
                            std::span<const UserLabel> labels) {
  std::vector<std::string> extra;
  extra.reserve(posts.size() + labels.size());
  for (const auto& p : posts) extra.push_back(p.user_id);
  for (const auto& l : labels) extra.push_back(l.user_id);
  std::sort(extra.begin(), extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());

  Dataset d;
  d.graph = build_graph(edges, extra);
  const std::size_t n = d.graph.node_count();
  d.scores.assign(n, {});
  d.post_ids.assign(n, {});
  d.labels.assign(n, -1);
  for (const auto& p : posts) {
    const NodeId u = d.graph.index_of(p.user_id);
    d.scores[u].push_back(p.score);
    d.post_ids[u].push_back(p.post_id);
  }
  for (const auto& l : labels) {
    if (l.label != 0 && l.label != 1) {
      throw Error(ErrorKind::kValidation, "label for '" + l.user_id + "' is not 0 or 1");
    }
    auto& slot = d.labels[d.graph.index_of(l.user_id)];
    if (slot >= 0) throw Error(ErrorKind::kDuplicate, "duplicate label for user '" + l.user_id + "'");
    slot = static_cast<std::int8_t>(l.label);
  }
  return d;
}

inline Dataset load_dataset(const std::string& edges_path, const std::string& posts_path,
                            const std::string& labels_path) {
  const auto edges = load_edges(edges_path);
  const auto posts = load_post_scores(posts_path);
  const auto labels = load_labels(labels_path);
  return make_dataset(edges, posts, labels);
}

/// Keeps only `nodes` (graph induced subgraph plus their posts and labels).
inline Dataset restrict_dataset(const Dataset& d, std::span<const NodeId> nodes) {
  std::vector<NodeId> keep(nodes.begin(), nodes.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  Dataset out;
  out.graph = d.graph.induced_subgraph(keep);
  out.scores.reserve(keep.size());
  out.labels.reserve(keep.size());
  for (NodeId u : keep) {
    out.scores.push_back(d.scores.at(u));
    out.labels.push_back(d.labels.at(u));
  }
  if (!d.post_ids.empty()) {
    out.post_ids.reserve(keep.size());
    for (NodeId u : keep) out.post_ids.push_back(d.post_ids.at(u));
  }
  return out;
}

inline Dataset restrict_to_lcc(const Dataset& d) {
  const auto nodes = largest_component_nodes(d.graph);
  if (nodes.size() == d.graph.node_count()) return d;
  return restrict_dataset(d, nodes);
}

inline void write_edges(const std::string& path, const UserGraph& g) {
  std::string out = "src,dst\n";
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const auto src = csv::escape(g.user_id(u));
    for (NodeId v : g.out_neighbors(u)) {
      out += src;
      out += ',';
      out += csv::escape(g.user_id(v));
      out += '\n';
    }
  }
  csv::write_file(path, out);
}

inline void write_post_scores(const std::string& path, std::span<const PostScore> posts) {
  std::string out;
  for (const auto& p : posts) {
    out += "{\"post_id\":" + detail::json_string(p.post_id) +
           ",\"user_id\":" + detail::json_string(p.user_id) +
           ",\"score\":" + detail::format_double(p.score);
    if (p.text) out += ",\"text\":" + detail::json_string(*p.text);
    out += "}\n";
  }
  csv::write_file(path, out);
}

/// Posts of every node in node order.
inline void write_dataset_posts(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  std::string buf;
  for (NodeId u = 0; u < d.graph.node_count(); ++u) {
    const auto user = detail::json_string(d.graph.user_id(u));
    for (std::size_t j = 0; j < d.scores[u].size(); ++j) {
      const std::string id = d.post_ids.empty() ? d.graph.user_id(u) + "_p" + std::to_string(j)
                                                : d.post_ids[u][j];
      buf += "{\"post_id\":" + detail::json_string(id) + ",\"user_id\":" + user +
             ",\"score\":" + detail::format_double(d.scores[u][j]) + "}\n";
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

inline void write_labels(const std::string& path, std::span<const UserLabel> labels) {
  std::string out = "user_id,label\n";
  for (const auto& l : labels) out += csv::escape(l.user_id) + "," + std::to_string(l.label) + "\n";
  csv::write_file(path, out);
}

inline std::vector<UserLabel> dataset_labels(const Dataset& d) {
  std::vector<UserLabel> out;
  for (NodeId u : d.labeled_nodes()) out.push_back({d.graph.user_id(u), d.labels[u]});
  return out;
}

/// Writes edges.csv, posts.jsonl and labels.csv under `dir` (must exist).
inline void save_dataset(const std::string& dir, const Dataset& d) {
  write_edges(dir + "/edges.csv", d.graph);
  write_dataset_posts(dir + "/posts.jsonl", d);
  write_labels(dir + "/labels.csv", dataset_labels(d));
}

}  // namespace hmd
