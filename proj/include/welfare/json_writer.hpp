#ifndef WELFARE_JSON_WRITER_HPP
#define WELFARE_JSON_WRITER_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace welfare {

/*!
 * Minimal streaming JSON writer with explicit key order and fixed "%.17g"
 * number formatting, so equal inputs always serialize to identical bytes.
 * Non-finite doubles become null.
 */
class JsonWriter {
  public:
    JsonWriter& begin_object() {
        pre_value();
        out_.push_back('{');
        first_.push_back(true);
        return *this;
    }
    JsonWriter& end_object() {
        out_.push_back('}');
        first_.pop_back();
        return *this;
    }
    JsonWriter& begin_array() {
        pre_value();
        out_.push_back('[');
        first_.push_back(true);
        return *this;
    }
    JsonWriter& end_array() {
        out_.push_back(']');
        first_.pop_back();
        return *this;
    }
    JsonWriter& key(std::string_view k) {
        pre_value();
        write_string(k);
        out_.push_back(':');
        pending_key_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        pre_value();
        if (!std::isfinite(v)) {
            out_ += "null";
            return *this;
        }
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out_ += buf;
        return *this;
    }
    JsonWriter& value(std::uint64_t v) {
        pre_value();
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
        out_ += buf;
        return *this;
    }
    JsonWriter& value(int v) {
        pre_value();
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%d", v);
        out_ += buf;
        return *this;
    }
    JsonWriter& value(bool v) {
        pre_value();
        out_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(std::string_view v) {
        pre_value();
        write_string(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string_view(v)); }
    JsonWriter& null() {
        pre_value();
        out_ += "null";
        return *this;
    }

    const std::string& str() const { return out_; }
    std::string take() { return std::move(out_); }

  private:
    void pre_value() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (!first_.empty()) {
            if (!first_.back()) out_.push_back(',');
            first_.back() = false;
        }
    }

    void write_string(std::string_view s) {
        out_.push_back('"');
        for (char ch : s) {
            switch (ch) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\r': out_ += "\\r"; break;
                case '\t': out_ += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x",
                                      static_cast<unsigned>(static_cast<unsigned char>(ch)));
                        out_ += buf;
                    } else {
                        out_.push_back(ch);
                    }
            }
        }
        out_.push_back('"');
    }

    std::string out_;
    std::vector<bool> first_;
    bool pending_key_ = false;
};

} // namespace welfare

#endif
