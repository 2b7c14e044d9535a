#include "accsp/problem_io.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace accsp {

namespace {

class Reader {
  public:
    Reader(std::string origin, bool strict) : origin_(std::move(origin)), strict_(strict) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        auto m = n.Mark();
        int line = m.is_null() ? 1 : m.line + 1, col = m.is_null() ? 1 : m.column + 1;
        throw LoadError(origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }

    void keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) const {
        if (!n.IsMap()) fail(n, where + " must be a mapping");
        if (!strict_) return;
        for (const auto& kv : n) {
            auto k = kv.first.as<std::string>();
            if (!allowed.count(k)) fail(kv.first, "unknown key '" + k + "' in " + where);
        }
    }

    YAML::Node need(const YAML::Node& n, const std::string& key) const {
        auto c = n[key];
        if (!c) fail(n, "missing required key '" + key + "'");
        return c;
    }

    double num(const YAML::Node& n) const {
        if (!n.IsScalar()) fail(n, "expected a number");
        const auto s = n.Scalar();
        if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-.inf" || s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) fail(n, "expected a number, got '" + s + "'");
            return v;
        } catch (const std::logic_error&) {
            fail(n, "expected a number, got '" + s + "'");
        }
    }

    int integer(const YAML::Node& n) const {
        double v = num(n);
        if (v != std::floor(v) || std::abs(v) > 1e9) fail(n, "expected an integer");
        return static_cast<int>(v);
    }

    bool boolean(const YAML::Node& n) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, "expected true or false");
        }
    }

    std::string str(const YAML::Node& n) const {
        if (!n.IsScalar()) fail(n, "expected a string");
        return n.Scalar();
    }

    std::vector<double> list(const YAML::Node& n, int expect = -1) const {
        if (!n.IsSequence()) fail(n, "expected a list of numbers");
        std::vector<double> v;
        for (const auto& e : n) v.push_back(num(e));
        if (expect >= 0 && static_cast<int>(v.size()) != expect)
            fail(n, "expected " + std::to_string(expect) + " entries, got " + std::to_string(v.size()));
        return v;
    }

    Vec vec(const YAML::Node& n, int expect) const {
        auto v = list(n, expect);
        return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Mat mat(const YAML::Node& n, int rows, int cols) const {
        if (!n.IsSequence()) fail(n, "expected a list of rows");
        if (rows >= 0 && static_cast<int>(n.size()) != rows)
            fail(n, "expected " + std::to_string(rows) + " rows, got " + std::to_string(n.size()));
        Mat M(static_cast<Eigen::Index>(n.size()), cols);
        for (std::size_t i = 0; i < n.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = vec(n[i], cols).transpose();
        return M;
    }

    SmoothConvexPiece piece(const YAML::Node& n, int dim, int d) const {
        keys(n, {"a", "b", "Q", "A_z", "b_z", "tables"}, "piece");
        SmoothConvexPiece q;
        q.a = n["a"] ? vec(n["a"], dim) : Vec::Zero(dim);
        q.b = n["b"] ? num(n["b"]) : 0.0;
        if (n["Q"]) {
            q.Q = mat(n["Q"], dim, dim);
            if (!q.Q.isApprox(q.Q.transpose(), 1e-12)) fail(n["Q"], "Q must be symmetric");
            Eigen::SelfAdjointEigenSolver<Mat> es(q.Q);
            if (es.eigenvalues().minCoeff() < -1e-10) fail(n["Q"], "Q must be positive semidefinite");
        }
        if (n["A_z"]) q.A_z = mat(n["A_z"], dim, d);
        if (n["b_z"]) q.b_z = vec(n["b_z"], d);
        if (n["tables"]) {
            if (!n["tables"].IsSequence()) fail(n["tables"], "tables must be a list");
            for (const auto& t : n["tables"]) {
                keys(t, {"column", "grad", "offset"}, "table term");
                TableTerm tt;
                tt.column = integer(need(t, "column"));
                if (tt.column < 0 || tt.column >= d) fail(t["column"], "table column out of range");
                auto g = need(t, "grad");
                if (!g.IsSequence()) fail(g, "grad must be a list of rows");
                for (const auto& r : g) tt.grad.push_back(vec(r, dim));
                tt.offset = list(need(t, "offset"), static_cast<int>(tt.grad.size()));
                q.tables.push_back(std::move(tt));
            }
        }
        return q;
    }

    DcMaxFunction dc(const YAML::Node& n, int dim, int d, const std::string& where) const {
        keys(n, {"g", "h"}, where);
        DcMaxFunction f;
        for (const char* side : {"g", "h"}) {
            auto s = need(n, side);
            if (!s.IsSequence() || s.size() == 0) fail(s, std::string(side) + " must be a nonempty list of pieces");
            for (const auto& e : s) (side[0] == 'g' ? f.g : f.h).push_back(piece(e, dim, d));
        }
        return f;
    }

    RandomSource source(const YAML::Node& n) const {
        keys(n, {"kind", "dim", "components", "support", "probs", "path"}, "source");
        RandomSource s;
        auto kind = str(need(n, "kind"));
        s.dim = integer(need(n, "dim"));
        if (s.dim < 1) fail(n["dim"], "dim must be positive");
        if (kind == "parametric") {
            s.kind = RandomSource::Kind::parametric;
            auto cs = need(n, "components");
            if (!cs.IsSequence() || static_cast<int>(cs.size()) != s.dim)
                fail(cs, "components must list one distribution per coordinate");
            for (const auto& c : cs) {
                keys(c, {"dist", "a", "b", "p", "v0", "v1", "mu", "sigma"}, "component");
                RandomComponent rc;
                auto dist = str(need(c, "dist"));
                if (dist == "uniform") {
                    rc.dist = RandomComponent::Dist::uniform;
                    rc.a = num(need(c, "a"));
                    rc.b = num(need(c, "b"));
                    if (!(rc.a < rc.b)) fail(c, "uniform needs a < b");
                } else if (dist == "bernoulli") {
                    rc.dist = RandomComponent::Dist::bernoulli;
                    rc.p = num(need(c, "p"));
                    rc.v0 = c["v0"] ? num(c["v0"]) : 0.0;
                    rc.v1 = c["v1"] ? num(c["v1"]) : 1.0;
                    if (!(rc.p >= 0 && rc.p <= 1)) fail(c["p"], "p must lie in [0, 1]");
                } else if (dist == "normal") {
                    rc.dist = RandomComponent::Dist::normal;
                    rc.mu = c["mu"] ? num(c["mu"]) : 0.0;
                    rc.sigma = c["sigma"] ? num(c["sigma"]) : 1.0;
                    if (!(rc.sigma > 0)) fail(c["sigma"], "sigma must be positive");
                } else {
                    fail(c["dist"], "unknown distribution '" + dist + "'");
                }
                s.components.push_back(rc);
            }
        } else if (kind == "table") {
            s.kind = RandomSource::Kind::table;
            auto sup = need(n, "support");
            if (!sup.IsSequence() || sup.size() == 0) fail(sup, "support must be a nonempty list of points");
            for (const auto& r : sup) s.rows.push_back(list(r, s.dim));
            s.probs = list(need(n, "probs"), static_cast<int>(s.rows.size()));
            double tot = 0.0;
            for (double p : s.probs) {
                if (p < 0) fail(n["probs"], "probabilities must be nonnegative");
                tot += p;
            }
            if (std::abs(tot - 1.0) > 1e-9) fail(n["probs"], "probabilities must sum to 1");
        } else if (kind == "file") {
            s.kind = RandomSource::Kind::file;
            s.path = str(need(n, "path"));
        } else {
            fail(n["kind"], "unknown source kind '" + kind + "'");
        }
        return s;
    }

  private:
    std::string origin_;
    bool strict_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path + ":1:1: cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

YAML::Node parse_yaml(const std::string& text, const std::string& origin) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw LoadError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                        ": " + e.msg);
    }
}

std::string num_text(double v) {
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit_vec(YAML::Emitter& e, const Vec& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) e << num_text(v(i));
    e << YAML::EndSeq;
}

void emit_list(YAML::Emitter& e, const std::vector<double>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << num_text(x);
    e << YAML::EndSeq;
}

void emit_mat(YAML::Emitter& e, const Mat& M) {
    e << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < M.rows(); ++i) emit_vec(e, M.row(i).transpose());
    e << YAML::EndSeq;
}

void emit_piece(YAML::Emitter& e, const SmoothConvexPiece& q) {
    e << YAML::BeginMap;
    e << YAML::Key << "a" << YAML::Value;
    emit_vec(e, q.a);
    e << YAML::Key << "b" << YAML::Value << num_text(q.b);
    if (q.Q.size()) {
        e << YAML::Key << "Q" << YAML::Value;
        emit_mat(e, q.Q);
    }
    if (q.A_z.size()) {
        e << YAML::Key << "A_z" << YAML::Value;
        emit_mat(e, q.A_z);
    }
    if (q.b_z.size()) {
        e << YAML::Key << "b_z" << YAML::Value;
        emit_vec(e, q.b_z);
    }
    if (!q.tables.empty()) {
        e << YAML::Key << "tables" << YAML::Value << YAML::BeginSeq;
        for (const auto& t : q.tables) {
            e << YAML::BeginMap << YAML::Key << "column" << YAML::Value << t.column;
            e << YAML::Key << "grad" << YAML::Value << YAML::BeginSeq;
            for (const auto& g : t.grad) emit_vec(e, g);
            e << YAML::EndSeq << YAML::Key << "offset" << YAML::Value;
            emit_list(e, t.offset);
            e << YAML::EndMap;
        }
        e << YAML::EndSeq;
    }
    e << YAML::EndMap;
}

void emit_dc(YAML::Emitter& e, const DcMaxFunction& f) {
    e << YAML::BeginMap << YAML::Key << "g" << YAML::Value << YAML::BeginSeq;
    for (const auto& q : f.g) emit_piece(e, q);
    e << YAML::EndSeq << YAML::Key << "h" << YAML::Value << YAML::BeginSeq;
    for (const auto& q : f.h) emit_piece(e, q);
    e << YAML::EndSeq << YAML::EndMap;
}

const char* dist_name(RandomComponent::Dist d) {
    switch (d) {
        case RandomComponent::Dist::uniform:
            return "uniform";
        case RandomComponent::Dist::bernoulli:
            return "bernoulli";
        case RandomComponent::Dist::normal:
            return "normal";
    }
    return "uniform";
}

const char* rule_kind_name(SeqRule::Kind k) {
    switch (k) {
        case SeqRule::Kind::constant:
            return "constant";
        case SeqRule::Kind::power:
            return "power";
        case SeqRule::Kind::log:
            return "log";
        case SeqRule::Kind::ratio:
            return "ratio";
    }
    return "constant";
}

}  // namespace

AccProblem parse_problem(const std::string& text, const std::string& origin, bool strict) {
    Reader r(origin, strict);
    YAML::Node root = parse_yaml(text, origin);
    r.keys(root, {"name", "n", "domain", "objective", "functionals", "rows", "source", "oracle"}, "problem");
    AccProblem p;
    p.name = root["name"] ? r.str(root["name"]) : "";
    p.n = r.integer(r.need(root, "n"));
    if (p.n < 1) r.fail(root["n"], "n must be positive");

    auto dom = r.need(root, "domain");
    r.keys(dom, {"A", "b", "lo", "hi"}, "domain");
    if (dom["A"]) {
        p.domain.A = r.mat(dom["A"], -1, p.n);
        p.domain.b = r.vec(r.need(dom, "b"), static_cast<int>(p.domain.A.rows()));
    } else {
        p.domain.A = Mat(0, p.n);
        p.domain.b = Vec(0);
    }
    if (dom["lo"]) p.domain.lo = r.vec(dom["lo"], p.n);
    if (dom["hi"]) p.domain.hi = r.vec(dom["hi"], p.n);

    p.source = r.source(r.need(root, "source"));
    const int d = p.source.dim;
    p.objective = r.dc(r.need(root, "objective"), p.n, d, "objective");

    auto fs = r.need(root, "functionals");
    if (!fs.IsSequence() || fs.size() == 0) r.fail(fs, "functionals must be a nonempty list");
    for (const auto& f : fs) p.functionals.push_back(r.dc(f, p.n, d, "functional"));

    auto rows = r.need(root, "rows");
    if (!rows.IsSequence() || rows.size() == 0) r.fail(rows, "rows must be a nonempty list");
    for (const auto& row : rows) {
        r.keys(row, {"e", "zeta"}, "row");
        ConstraintRow cr;
        cr.e = r.list(r.need(row, "e"), p.L());
        cr.zeta = r.num(r.need(row, "zeta"));
        p.rows.push_back(std::move(cr));
    }
    if (root["oracle"]) p.oracle = r.str(root["oracle"]);
    try {
        p.check();
    } catch (const std::exception& e) {
        r.fail(root, e.what());
    }
    return p;
}

AccProblem load_problem(const std::string& path, bool strict) { return parse_problem(slurp(path), path, strict); }

std::string dump_problem(const AccProblem& p) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << p.name;
    e << YAML::Key << "n" << YAML::Value << p.n;
    e << YAML::Key << "domain" << YAML::Value << YAML::BeginMap;
    if (p.domain.A.rows() > 0) {
        e << YAML::Key << "A" << YAML::Value;
        emit_mat(e, p.domain.A);
        e << YAML::Key << "b" << YAML::Value;
        emit_vec(e, p.domain.b);
    }
    if (p.domain.lo.size()) {
        e << YAML::Key << "lo" << YAML::Value;
        emit_vec(e, p.domain.lo);
    }
    if (p.domain.hi.size()) {
        e << YAML::Key << "hi" << YAML::Value;
        emit_vec(e, p.domain.hi);
    }
    e << YAML::EndMap;
    e << YAML::Key << "objective" << YAML::Value;
    emit_dc(e, p.objective);
    e << YAML::Key << "functionals" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : p.functionals) emit_dc(e, f);
    e << YAML::EndSeq;
    e << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : p.rows) {
        e << YAML::BeginMap << YAML::Key << "e" << YAML::Value;
        emit_list(e, r.e);
        e << YAML::Key << "zeta" << YAML::Value << num_text(r.zeta) << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "source" << YAML::Value << YAML::BeginMap;
    const auto& s = p.source;
    switch (s.kind) {
        case RandomSource::Kind::parametric:
            e << YAML::Key << "kind" << YAML::Value << "parametric";
            e << YAML::Key << "dim" << YAML::Value << s.dim;
            e << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
            for (const auto& c : s.components) {
                e << YAML::Flow << YAML::BeginMap << YAML::Key << "dist" << YAML::Value << dist_name(c.dist);
                if (c.dist == RandomComponent::Dist::uniform)
                    e << YAML::Key << "a" << YAML::Value << num_text(c.a) << YAML::Key << "b" << YAML::Value
                      << num_text(c.b);
                else if (c.dist == RandomComponent::Dist::bernoulli)
                    e << YAML::Key << "p" << YAML::Value << num_text(c.p) << YAML::Key << "v0" << YAML::Value
                      << num_text(c.v0) << YAML::Key << "v1" << YAML::Value << num_text(c.v1);
                else
                    e << YAML::Key << "mu" << YAML::Value << num_text(c.mu) << YAML::Key << "sigma" << YAML::Value
                      << num_text(c.sigma);
                e << YAML::EndMap;
            }
            e << YAML::EndSeq;
            break;
        case RandomSource::Kind::table:
            e << YAML::Key << "kind" << YAML::Value << "table";
            e << YAML::Key << "dim" << YAML::Value << s.dim;
            e << YAML::Key << "support" << YAML::Value << YAML::BeginSeq;
            for (const auto& r : s.rows) emit_list(e, r);
            e << YAML::EndSeq << YAML::Key << "probs" << YAML::Value;
            emit_list(e, s.probs);
            break;
        case RandomSource::Kind::file:
            e << YAML::Key << "kind" << YAML::Value << "file";
            e << YAML::Key << "dim" << YAML::Value << s.dim;
            e << YAML::Key << "path" << YAML::Value << s.path;
            break;
    }
    e << YAML::EndMap;
    if (!p.oracle.empty()) e << YAML::Key << "oracle" << YAML::Value << p.oracle;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

Schedule parse_schedule(const std::string& text, const std::string& origin, int* nu_max) {
    Reader r(origin, true);
    YAML::Node root = parse_yaml(text, origin);
    r.keys(root, {"nu_max", "N", "lambda", "rho", "gamma", "constants"}, "schedule");
    auto rule = [&](const YAML::Node& n) {
        r.keys(n, {"kind", "coef", "exponent", "offset", "floor", "cap", "ceil"}, "sequence rule");
        SeqRule s;
        auto k = r.str(r.need(n, "kind"));
        if (k == "constant") s.kind = SeqRule::Kind::constant;
        else if (k == "power") s.kind = SeqRule::Kind::power;
        else if (k == "log") s.kind = SeqRule::Kind::log;
        else if (k == "ratio") s.kind = SeqRule::Kind::ratio;
        else r.fail(n["kind"], "unknown rule kind '" + k + "'");
        if (n["coef"]) s.coef = r.num(n["coef"]);
        if (n["exponent"]) s.exponent = r.num(n["exponent"]);
        if (n["offset"]) s.offset = r.num(n["offset"]);
        if (n["floor"]) s.floor = r.num(n["floor"]);
        if (n["cap"]) s.cap = r.num(n["cap"]);
        if (n["ceil"]) s.ceil = r.boolean(n["ceil"]);
        return s;
    };
    Schedule s;
    s.N = rule(r.need(root, "N"));
    s.lambda = rule(r.need(root, "lambda"));
    s.rho = rule(r.need(root, "rho"));
    s.gamma = rule(r.need(root, "gamma"));
    if (auto c = root["constants"]) {
        r.keys(c, {"beta", "c1", "c2", "c3", "c4", "delta", "alpha1", "alpha2", "nu_bar"}, "constants");
        auto& k = s.constants;
        if (c["beta"]) k.beta = r.num(c["beta"]);
        if (c["c1"]) k.c1 = r.num(c["c1"]);
        if (c["c2"]) k.c2 = r.num(c["c2"]);
        if (c["c3"]) k.c3 = r.num(c["c3"]);
        if (c["c4"]) k.c4 = r.num(c["c4"]);
        if (c["delta"]) k.delta = r.num(c["delta"]);
        if (c["alpha1"]) k.alpha1 = r.num(c["alpha1"]);
        if (c["alpha2"]) k.alpha2 = r.num(c["alpha2"]);
        if (c["nu_bar"]) k.nu_bar = r.integer(c["nu_bar"]);
    }
    if (nu_max) *nu_max = root["nu_max"] ? r.integer(root["nu_max"]) : 12;
    return s;
}

Schedule load_schedule(const std::string& path, int* nu_max) { return parse_schedule(slurp(path), path, nu_max); }

std::string dump_schedule(const Schedule& s, int nu_max) {
    YAML::Emitter e;
    auto rule = [&](const char* name, const SeqRule& r) {
        e << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap;
        e << YAML::Key << "kind" << YAML::Value << rule_kind_name(r.kind);
        e << YAML::Key << "coef" << YAML::Value << num_text(r.coef);
        e << YAML::Key << "exponent" << YAML::Value << num_text(r.exponent);
        e << YAML::Key << "offset" << YAML::Value << num_text(r.offset);
        if (r.floor) e << YAML::Key << "floor" << YAML::Value << num_text(*r.floor);
        if (r.cap) e << YAML::Key << "cap" << YAML::Value << num_text(*r.cap);
        if (r.ceil) e << YAML::Key << "ceil" << YAML::Value << true;
        e << YAML::EndMap;
    };
    e << YAML::BeginMap << YAML::Key << "nu_max" << YAML::Value << nu_max;
    rule("N", s.N);
    rule("lambda", s.lambda);
    rule("rho", s.rho);
    rule("gamma", s.gamma);
    const auto& k = s.constants;
    e << YAML::Key << "constants" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "beta" << YAML::Value << num_text(k.beta) << YAML::Key << "c1" << YAML::Value << num_text(k.c1)
      << YAML::Key << "c2" << YAML::Value << num_text(k.c2) << YAML::Key << "c3" << YAML::Value << num_text(k.c3)
      << YAML::Key << "c4" << YAML::Value << num_text(k.c4) << YAML::Key << "delta" << YAML::Value
      << num_text(k.delta) << YAML::Key << "alpha1" << YAML::Value << num_text(k.alpha1) << YAML::Key << "alpha2"
      << YAML::Value << num_text(k.alpha2) << YAML::Key << "nu_bar" << YAML::Value << k.nu_bar;
    e << YAML::EndMap << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace accsp
