#pragma once

// The pulse-sequence language and its compiler.
//
// Grammar (comments run from '#' to end of line, whitespace is free):
//   program := stmt*
//   stmt    := "init" IDENT
//            | "repeat" INT "{" stmt* "}"
//            | "delay" NUMBER "ms"
//            | "pulse" ("S"|"E") ("x"|"y") SIGNED_INT     # angle in degrees
//            | "measure" IDENT                            # MDS | Mplus | Mminus
//            | "acquire"
//
// Durations are written with an explicit "ms" unit; in theory mode the same
// token simply reads as one abstract time unit.  Programs lower onto the
// channel stack through the same Stepper the experiment harnesses use, so a
// compiled sequence and its harness twin produce bit-identical traces.

#include <qzsim/experiments.hpp>

#include <cctype>
#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qzsim {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ", col " + std::to_string(col_) +
                             ": " + msg),
          line(line_),
          col(col_) {}
};

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct Stmt;

struct InitStmt {
    std::string state;  // plus | zero (pseudopure_ prefixes accepted)
    bool operator==(const InitStmt&) const = default;
};
struct RepeatStmt {
    int count = 1;
    std::vector<Stmt> body;
    bool operator==(const RepeatStmt&) const;
};
struct DelayStmt {
    double duration_ms = 0.0;
    bool operator==(const DelayStmt&) const = default;
};
struct PulseStmt {
    PulseTarget target = PulseTarget::S;
    PulseAxis axis = PulseAxis::y;
    int angle_deg = 90;
    bool operator==(const PulseStmt&) const = default;
};
struct MeasureStmt {
    std::string spec_name;
    bool operator==(const MeasureStmt&) const = default;
};
struct AcquireStmt {
    bool operator==(const AcquireStmt&) const = default;
};

struct Stmt {
    std::variant<InitStmt, RepeatStmt, DelayStmt, PulseStmt, MeasureStmt, AcquireStmt> node;
    int line = 0;
    int col = 0;
    bool operator==(const Stmt& o) const { return node == o.node; }
};

inline bool RepeatStmt::operator==(const RepeatStmt& o) const {
    return count == o.count && body == o.body;
}

struct SequenceProgram {
    std::vector<Stmt> statements;
    bool operator==(const SequenceProgram& o) const { return statements == o.statements; }
};

inline const std::vector<std::string>& default_measurement_names() {
    static const std::vector<std::string> names{"MDS", "Mplus", "Mminus"};
    return names;
}
inline const std::vector<std::string>& known_init_names() {
    static const std::vector<std::string> names{"plus", "zero", "pseudopure_plus",
                                                "pseudopure_zero"};
    return names;
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Kind { ident, number, integer, lbrace, rbrace, end };
    Kind kind = Kind::end;
    std::string text;
    double value = 0.0;
    long ivalue = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= src_.size()) return t;  // end
        const char c = src_[pos_];
        if (c == '{') {
            advance();
            t.kind = Token::Kind::lbrace;
            t.text = "{";
            return t;
        }
        if (c == '}') {
            advance();
            t.kind = Token::Kind::rbrace;
            t.text = "}";
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                t.text += src_[pos_];
                advance();
            }
            t.kind = Token::Kind::ident;
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
            std::string num;
            if (c == '-' || c == '+') {
                num += c;
                advance();
            }
            bool saw_digit = false, saw_dot = false;
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                if (std::isdigit(static_cast<unsigned char>(d))) {
                    saw_digit = true;
                } else if (d == '.' && !saw_dot) {
                    saw_dot = true;
                } else {
                    break;
                }
                num += d;
                advance();
            }
            if (!saw_digit) throw ParseError(t.line, t.col, "stray '" + std::string(1, c) + "'");
            t.text = num;
            if (saw_dot) {
                t.kind = Token::Kind::number;
                t.value = parse_double(num, t);
            } else {
                t.kind = Token::Kind::integer;
                t.ivalue = std::stol(num);
                t.value = static_cast<double>(t.ivalue);
            }
            return t;
        }
        throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
    }

  private:
    double parse_double(const std::string& s, const Token& t) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ParseError(t.line, t.col, "bad number '" + s + "'");
        return v;
    }
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_ws_and_comments() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
  public:
    Parser(std::string_view src, const std::vector<std::string>& spec_names)
        : lexer_(src), specs_(spec_names) {
        cur_ = lexer_.next();
    }

    SequenceProgram parse_program() {
        SequenceProgram prog;
        while (cur_.kind != Token::Kind::end) prog.statements.push_back(parse_stmt(true));
        return prog;
    }

  private:
    Stmt parse_stmt(bool top_level) {
        expect(Token::Kind::ident, "statement keyword");
        Stmt stmt;
        stmt.line = cur_.line;
        stmt.col = cur_.col;
        const Token kw = take();

        if (kw.text == "init") {
            const Token name = take_ident("initial-state name");
            bool known = false;
            for (const auto& n : known_init_names()) known = known || (n == name.text);
            if (!known)
                throw ParseError(name.line, name.col, "unknown initial state '" + name.text + "'");
            stmt.node = InitStmt{name.text};
        } else if (kw.text == "repeat") {
            if (cur_.kind != Token::Kind::integer)
                throw ParseError(cur_.line, cur_.col, "repeat needs an integer count");
            const Token cnt = take();
            if (cnt.ivalue < 1)
                throw ParseError(cnt.line, cnt.col, "repeat count must be >= 1");
            if (cur_.kind != Token::Kind::lbrace)
                throw ParseError(cur_.line, cur_.col, "expected '{' after repeat count");
            take();
            RepeatStmt rep;
            rep.count = static_cast<int>(cnt.ivalue);
            while (cur_.kind != Token::Kind::rbrace) {
                if (cur_.kind == Token::Kind::end)
                    throw ParseError(cur_.line, cur_.col, "unterminated repeat block");
                rep.body.push_back(parse_stmt(false));
            }
            take();  // '}'
            if (top_level && !contains_acquire(rep.body))
                throw ParseError(stmt.line, stmt.col,
                                 "top-level repeat must contain an acquire");
            stmt.node = std::move(rep);
        } else if (kw.text == "delay") {
            if (cur_.kind != Token::Kind::number && cur_.kind != Token::Kind::integer)
                throw ParseError(cur_.line, cur_.col, "delay needs a duration");
            const Token dur = take();
            const Token unit = take_ident("duration unit");
            if (unit.text != "ms")
                throw ParseError(unit.line, unit.col, "durations take the 'ms' unit");
            if (dur.value < 0)
                throw ParseError(dur.line, dur.col, "delay duration must be >= 0");
            stmt.node = DelayStmt{dur.value};
        } else if (kw.text == "pulse") {
            const Token tgt = take_ident("pulse target (S or E)");
            PulseStmt p;
            if (tgt.text == "S")
                p.target = PulseTarget::S;
            else if (tgt.text == "E")
                p.target = PulseTarget::E;
            else
                throw ParseError(tgt.line, tgt.col, "pulse target must be S or E");
            const Token ax = take_ident("pulse axis (x or y)");
            if (ax.text == "x")
                p.axis = PulseAxis::x;
            else if (ax.text == "y")
                p.axis = PulseAxis::y;
            else
                throw ParseError(ax.line, ax.col, "pulse axis must be x or y");
            if (cur_.kind != Token::Kind::integer)
                throw ParseError(cur_.line, cur_.col, "pulse angle must be a signed integer");
            const Token ang = take();
            p.angle_deg = static_cast<int>(ang.ivalue);
            stmt.node = p;
        } else if (kw.text == "measure") {
            const Token name = take_ident("measurement name");
            bool known = false;
            for (const auto& n : specs_) known = known || (n == name.text);
            if (!known)
                throw ParseError(name.line, name.col,
                                 "unknown measurement spec '" + name.text + "'");
            stmt.node = MeasureStmt{name.text};
        } else if (kw.text == "acquire") {
            stmt.node = AcquireStmt{};
        } else {
            throw ParseError(kw.line, kw.col, "unknown statement '" + kw.text + "'");
        }
        return stmt;
    }

    static bool contains_acquire(const std::vector<Stmt>& body) {
        for (const Stmt& s : body) {
            if (std::holds_alternative<AcquireStmt>(s.node)) return true;
            if (const auto* rep = std::get_if<RepeatStmt>(&s.node))
                if (contains_acquire(rep->body)) return true;
        }
        return false;
    }

    Token take() {
        Token t = cur_;
        cur_ = lexer_.next();
        return t;
    }
    Token take_ident(const char* what) {
        if (cur_.kind != Token::Kind::ident)
            throw ParseError(cur_.line, cur_.col, std::string("expected ") + what);
        return take();
    }
    void expect(Token::Kind kind, const char* what) {
        if (cur_.kind != kind)
            throw ParseError(cur_.line, cur_.col, std::string("expected ") + what);
    }

    Lexer lexer_;
    Token cur_;
    const std::vector<std::string>& specs_;
};

inline std::string format_duration(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline SequenceProgram parse_sequence(
    std::string_view text,
    const std::vector<std::string>& spec_names = default_measurement_names()) {
    detail::Parser parser(text, spec_names);
    return parser.parse_program();
}

// Canonical textual form; parse(pretty_print(parse(x))) is a fixed point.
inline std::string pretty_print(const SequenceProgram& prog) {
    std::string out;
    auto emit = [&out](const std::vector<Stmt>& stmts, int depth, auto&& self) -> void {
        const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
        for (const Stmt& s : stmts) {
            if (const auto* init = std::get_if<InitStmt>(&s.node)) {
                out += pad + "init " + init->state + "\n";
            } else if (const auto* rep = std::get_if<RepeatStmt>(&s.node)) {
                out += pad + "repeat " + std::to_string(rep->count) + " {\n";
                self(rep->body, depth + 1, self);
                out += pad + "}\n";
            } else if (const auto* del = std::get_if<DelayStmt>(&s.node)) {
                out += pad + "delay " + detail::format_duration(del->duration_ms) + "ms\n";
            } else if (const auto* pul = std::get_if<PulseStmt>(&s.node)) {
                out += pad + "pulse " + (pul->target == PulseTarget::S ? "S " : "E ") +
                       (pul->axis == PulseAxis::x ? "x " : "y ") +
                       std::to_string(pul->angle_deg) + "\n";
            } else if (const auto* mea = std::get_if<MeasureStmt>(&s.node)) {
                out += pad + "measure " + mea->spec_name + "\n";
            } else {
                out += pad + "acquire\n";
            }
        }
    };
    emit(prog.statements, 0, emit);
    return out;
}

// ---------------------------------------------------------------------------
// Compiler: lower the AST onto the channel stack
// ---------------------------------------------------------------------------

struct OpInit {
    InitialState state;
};
struct OpEvolve {
    int steps;
};
struct OpPulse {
    PulseTarget target;
    PulseAxis axis;
    double angle_rad;
};
struct OpMeasure {
    MeasurementSpec spec;
};
struct OpAcquire {};

using ChannelOp = std::variant<OpInit, OpEvolve, OpPulse, OpMeasure, OpAcquire>;

struct CompiledProgram {
    std::vector<ChannelOp> ops;
    ExperimentConfig config;
};

inline MeasurementSpec resolve_measurement(const std::string& name,
                                           const ExperimentConfig& cfg) {
    if (name == "MDS") return MeasurementSpec::ideal_default();
    if (name == "Mplus") return MeasurementSpec::entangler(MeasurementSign::plus, cfg.tau_z_ms);
    if (name == "Mminus") return MeasurementSpec::entangler(MeasurementSign::minus, cfg.tau_z_ms);
    throw ValidationError("unknown measurement spec '" + name + "'");
}

// Delays lower to integration steps on the dt grid (hard error when off the
// grid); pulses lower to pulse_step; repeat blocks unroll.
inline CompiledProgram compile_sequence(const SequenceProgram& prog,
                                        const ExperimentConfig& cfg) {
    cfg.validate();
    CompiledProgram out;
    out.config = cfg;

    auto lower = [&](const std::vector<Stmt>& stmts, auto&& self) -> void {
        for (const Stmt& s : stmts) {
            if (const auto* init = std::get_if<InitStmt>(&s.node)) {
                const bool plus =
                    (init->state == "plus" || init->state == "pseudopure_plus");
                out.ops.push_back(OpInit{plus ? InitialState::pseudopure_plus
                                              : InitialState::pseudopure_zero});
            } else if (const auto* rep = std::get_if<RepeatStmt>(&s.node)) {
                for (int i = 0; i < rep->count; ++i) self(rep->body, self);
            } else if (const auto* del = std::get_if<DelayStmt>(&s.node)) {
                if (del->duration_ms > 0)
                    out.ops.push_back(OpEvolve{cfg.steps_for(del->duration_ms, "delay")});
            } else if (const auto* pul = std::get_if<PulseStmt>(&s.node)) {
                // divide first: right-angle multiples stay bit-exact
                out.ops.push_back(
                    OpPulse{pul->target, pul->axis, (pul->angle_deg / 180.0) * kPi});
            } else if (const auto* mea = std::get_if<MeasureStmt>(&s.node)) {
                out.ops.push_back(OpMeasure{resolve_measurement(mea->spec_name, cfg)});
            } else {
                out.ops.push_back(OpAcquire{});
            }
        }
    };
    lower(prog.statements, lower);
    return out;
}

// Execute a compiled program.  The time column is always wall time; the
// Stepper advances its clock with one addition per elementary step, so a
// compiled sequence and its harness twin agree bit for bit.
inline SignalTrace run_compiled(const CompiledProgram& prog) {
    const ExperimentConfig& cfg = prog.config;
    detail::Stepper stepper(cfg);
    Density rho = cfg.initial_state();
    Mat target = ptrace(rho.mat(), {0});

    SignalTrace trace;
    trace.config = cfg;
    for (const ChannelOp& op : prog.ops) {
        if (const auto* init = std::get_if<OpInit>(&op)) {
            ExperimentConfig c2 = cfg;
            c2.initial = init->state;
            rho = c2.initial_state();
            target = ptrace(rho.mat(), {0});
        } else if (const auto* ev = std::get_if<OpEvolve>(&op)) {
            stepper.free_block(rho, ev->steps);
        } else if (const auto* pul = std::get_if<OpPulse>(&op)) {
            stepper.pulse(rho, pul->axis, pul->target, pul->angle_rad);
        } else if (const auto* mea = std::get_if<OpMeasure>(&op)) {
            stepper.measure(rho, mea->spec);
        } else {
            stepper.maybe_resymmetrize(rho);
            trace.points.push_back(detail::sample_point(stepper.wall(), rho, target));
        }
    }
    return trace;
}

}  // namespace qzsim
