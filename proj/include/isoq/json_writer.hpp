#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace isoq {

// Minimal ordered JSON emitter. Keys appear exactly in insertion order and
// doubles are printed with 17 significant digits, which keeps reports
// byte-stable across reruns and round-trip exact.
class JsonWriter {
public:
    void begin_object() {
        comma();
        out_ += '{';
        stack_.push_back(false);
    }
    void end_object() {
        out_ += '}';
        stack_.pop_back();
        mark();
    }
    void begin_array() {
        comma();
        out_ += '[';
        stack_.push_back(false);
    }
    void end_array() {
        out_ += ']';
        stack_.pop_back();
        mark();
    }
    void key(const std::string& k) {
        comma();
        append_string(k);
        out_ += ':';
        pending_value_ = true;
    }
    void value(double x) {
        comma();
        if (!std::isfinite(x)) {
            out_ += "null";
        } else {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out_ += buf;
        }
        mark();
    }
    void value(int x) {
        comma();
        out_ += std::to_string(x);
        mark();
    }
    void value(bool b) {
        comma();
        out_ += b ? "true" : "false";
        mark();
    }
    void value(const std::string& s) {
        comma();
        append_string(s);
        mark();
    }
    void value(const char* s) { value(std::string(s)); }
    void null_value() {
        comma();
        out_ += "null";
        mark();
    }

    [[nodiscard]] const std::string& str() const { return out_; }

private:
    void comma() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!stack_.empty() && stack_.back()) out_ += ',';
    }
    void mark() {
        if (!stack_.empty()) stack_.back() = true;
    }
    void append_string(const std::string& s) {
        out_ += '"';
        for (char ch : s) {
            switch (ch) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                        out_ += buf;
                    } else {
                        out_ += ch;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> stack_;
    bool pending_value_ = false;
};

}  // namespace isoq
