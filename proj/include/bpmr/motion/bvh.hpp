#pragma once

// BVH (HIERARCHY/MOTION) reader and writer. The reader accepts arbitrary
// {X,Y,Z}{position,rotation} channel layouts; the writer emits a canonical
// layout (root: 3 positions + ZXY rotations, children: ZXY rotations).

#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "bpmr/kinematics/quat.hpp"
#include "bpmr/motion/skeleton.hpp"

namespace bpmr {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line)
      : std::runtime_error("ParseError (line " + std::to_string(line) + "): " + msg) {}
};

struct UnsupportedChannel : std::runtime_error {
  UnsupportedChannel(const std::string& ch, int line)
      : std::runtime_error("UnsupportedChannel (line " + std::to_string(line) + "): " + ch) {}
};

// Pre-localization container: rotations already converted to unit quaternions.
struct RawMotion {
  SkeletonDef skeleton;
  double frame_time = 1.0 / 30.0;
  std::vector<Vec3> root_positions;            // T
  std::vector<std::vector<Quat>> local_rotations;  // T x J, hemisphere-consistent

  int frame_count() const { return static_cast<int>(root_positions.size()); }
};

namespace bvh_detail {

struct Lexer {
  std::vector<std::pair<std::string, int>> tokens;  // token, line
  size_t pos = 0;

  explicit Lexer(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens.emplace_back(tok, lineno);
    }
  }

  bool done() const { return pos >= tokens.size(); }
  int line() const {
    return done() ? (tokens.empty() ? 0 : tokens.back().second) : tokens[pos].second;
  }
  const std::string& peek() const {
    if (done()) throw ParseError("unexpected end of file", line());
    return tokens[pos].first;
  }
  std::string next() {
    if (done()) throw ParseError("unexpected end of file", line());
    return tokens[pos++].first;
  }
  void expect(const std::string& tok) {
    const int ln = line();
    const std::string got = next();
    if (got != tok) throw ParseError("expected '" + tok + "', got '" + got + "'", ln);
  }
  double number() {
    const int ln = line();
    const std::string tok = next();
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected a number, got '" + tok + "'", ln);
    }
  }
  int integer() {
    const double v = number();
    return static_cast<int>(v);
  }
};

struct JointChannels {
  std::vector<std::string> names;  // in file order
};

inline bool valid_channel(const std::string& c) {
  return c == "Xposition" || c == "Yposition" || c == "Zposition" ||
         c == "Xrotation" || c == "Yrotation" || c == "Zrotation";
}

}  // namespace bvh_detail

// Parse a BVH file. End Sites become end-effector markers, not joints.
inline std::pair<SkeletonDef, RawMotion> parse_bvh(std::istream& in,
                                                   const std::string& name = "bvh") {
  using namespace bvh_detail;
  Lexer lex(in);
  SkeletonDef skel;
  skel.name = name;
  std::vector<JointChannels> channels;

  lex.expect("HIERARCHY");
  lex.expect("ROOT");

  // Recursive descent over the joint tree.
  struct Parser {
    Lexer& lex;
    SkeletonDef& skel;
    std::vector<JointChannels>& channels;

    void joint_body(int index) {
      lex.expect("{");
      lex.expect("OFFSET");
      Vec3 off{lex.number(), lex.number(), lex.number()};
      skel.offsets[static_cast<size_t>(index)] = off;
      lex.expect("CHANNELS");
      const int n = lex.integer();
      for (int i = 0; i < n; ++i) {
        const int ln = lex.line();
        std::string ch = lex.next();
        if (!valid_channel(ch)) throw UnsupportedChannel(ch, ln);
        channels[static_cast<size_t>(index)].names.push_back(ch);
      }
      while (true) {
        const std::string tok = lex.next();
        if (tok == "}") break;
        if (tok == "JOINT") {
          add_joint(index);
        } else if (tok == "End") {
          lex.expect("Site");
          lex.expect("{");
          lex.expect("OFFSET");
          Vec3 eoff{lex.number(), lex.number(), lex.number()};
          skel.end_effectors.insert(index);
          skel.end_site_offsets[static_cast<size_t>(index)] = eoff;
          lex.expect("}");
        } else {
          throw ParseError("unexpected token '" + tok + "' in joint body", lex.line());
        }
      }
    }

    void add_joint(int parent_index) {
      const std::string jname = lex.next();
      const int index = skel.joint_count();
      skel.parent.push_back(parent_index);
      skel.joint_names.push_back(jname);
      skel.offsets.push_back({});
      skel.end_site_offsets.push_back({});
      channels.push_back({});
      joint_body(index);
    }
  } parser{lex, skel, channels};

  parser.add_joint(-1);
  skel.validate();

  lex.expect("MOTION");
  lex.expect("Frames:");
  const int frames = lex.integer();
  if (frames < 2) throw ParseError("need at least 2 frames", lex.line());
  lex.expect("Frame");
  lex.expect("Time:");
  const double frame_time = lex.number();

  const int J = skel.joint_count();
  RawMotion motion;
  motion.skeleton = skel;
  motion.frame_time = frame_time;
  motion.root_positions.resize(static_cast<size_t>(frames));
  motion.local_rotations.assign(static_cast<size_t>(frames),
                                std::vector<Quat>(static_cast<size_t>(J)));

  for (int t = 0; t < frames; ++t) {
    for (int j = 0; j < J; ++j) {
      Vec3 pos{};
      Quat q = Quat::identity();
      for (const auto& ch : channels[static_cast<size_t>(j)].names) {
        const double v = lex.number();
        if (ch == "Xposition") pos.x = v;
        else if (ch == "Yposition") pos.y = v;
        else if (ch == "Zposition") pos.z = v;
        else q = quat_mul(q, quat_about(ch[0], v * M_PI / 180.0));
      }
      if (j == 0) motion.root_positions[static_cast<size_t>(t)] = pos;
      Quat qq = quat_normalize(q);
      // hemisphere consistency along time per joint
      if (t > 0) {
        const Quat& prev = motion.local_rotations[static_cast<size_t>(t - 1)][static_cast<size_t>(j)];
        const double dot = prev.w * qq.w + prev.x * qq.x + prev.y * qq.y + prev.z * qq.z;
        if (dot < 0.0) qq = {-qq.w, -qq.x, -qq.y, -qq.z};
      }
      motion.local_rotations[static_cast<size_t>(t)][static_cast<size_t>(j)] = qq;
    }
  }
  if (!lex.done()) throw ParseError("trailing data after motion frames", lex.line());

  skel.height = skel.compute_height();
  motion.skeleton.height = skel.height;
  return {skel, motion};
}

inline std::pair<SkeletonDef, RawMotion> parse_bvh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open BVH file: " + path);
  return parse_bvh(in, path);
}

// Write motion as BVH with the canonical channel layout (or per-joint orders).
inline void serialize_bvh(std::ostream& out, const SkeletonDef& skel, const RawMotion& motion,
                          EulerOrder order = EulerOrder::ZXY) {
  const int J = skel.joint_count();
  const char* ord = euler_order_to_string(order);
  auto indent = [&](int depth) { for (int i = 0; i < depth; ++i) out << "\t"; };

  std::vector<std::vector<int>> children(static_cast<size_t>(J));
  for (int j = 1; j < J; ++j) children[static_cast<size_t>(skel.parent[static_cast<size_t>(j)])].push_back(j);

  out << std::setprecision(10);
  std::function<void(int, int)> emit = [&](int j, int depth) {
    indent(depth);
    out << (j == 0 ? "ROOT " : "JOINT ") << skel.joint_names[static_cast<size_t>(j)] << "\n";
    indent(depth);
    out << "{\n";
    indent(depth + 1);
    const Vec3& o = skel.offsets[static_cast<size_t>(j)];
    out << "OFFSET " << o.x << " " << o.y << " " << o.z << "\n";
    indent(depth + 1);
    if (j == 0) {
      out << "CHANNELS 6 Xposition Yposition Zposition " << ord[0] << "rotation " << ord[1]
          << "rotation " << ord[2] << "rotation\n";
    } else {
      out << "CHANNELS 3 " << ord[0] << "rotation " << ord[1] << "rotation " << ord[2]
          << "rotation\n";
    }
    const auto& kids = children[static_cast<size_t>(j)];
    if (kids.empty() || skel.end_effectors.count(j)) {
      indent(depth + 1);
      out << "End Site\n";
      indent(depth + 1);
      out << "{\n";
      indent(depth + 2);
      const Vec3& e = skel.end_site_offsets[static_cast<size_t>(j)];
      out << "OFFSET " << e.x << " " << e.y << " " << e.z << "\n";
      indent(depth + 1);
      out << "}\n";
    }
    for (int c : kids) emit(c, depth + 1);
    indent(depth);
    out << "}\n";
  };

  out << "HIERARCHY\n";
  emit(0, 0);
  out << "MOTION\n";
  out << "Frames: " << motion.frame_count() << "\n";
  out << "Frame Time: " << motion.frame_time << "\n";
  for (int t = 0; t < motion.frame_count(); ++t) {
    const Vec3& p = motion.root_positions[static_cast<size_t>(t)];
    out << p.x << " " << p.y << " " << p.z;
    for (int j = 0; j < J; ++j) {
      const auto e = quat_to_euler(order, motion.local_rotations[static_cast<size_t>(t)][static_cast<size_t>(j)]);
      out << " " << e[0] * 180.0 / M_PI << " " << e[1] * 180.0 / M_PI << " " << e[2] * 180.0 / M_PI;
    }
    out << "\n";
  }
}

inline void serialize_bvh_file(const std::string& path, const SkeletonDef& skel,
                               const RawMotion& motion, EulerOrder order = EulerOrder::ZXY) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write BVH file: " + path);
  serialize_bvh(out, skel, motion, order);
}

}  // namespace bpmr
