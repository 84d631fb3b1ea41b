#include "xbench/toml_lite.hpp"

#include "xbench/common.hpp"

#include <cctype>

namespace xbench::toml {
namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;

    [[nodiscard]] bool done() const { return pos >= text.size(); }
    [[nodiscard]] char peek() const { return done() ? '\0' : text[pos]; }
    char get() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
    // Skips spaces and tabs; with `newlines` also line breaks and comments.
    void skip(bool newlines) {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') {
                get();
            } else if (newlines && c == '\n') {
                get();
            } else if (c == '#') {
                while (!done() && peek() != '\n') get();
            } else {
                break;
            }
        }
    }
};

std::string read_bare(Cursor& cur) {
    std::string out;
    while (!cur.done()) {
        const char c = cur.peek();
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '+') {
            out.push_back(cur.get());
        } else {
            break;
        }
    }
    return out;
}

std::string read_string(Cursor& cur) {
    cur.get();  // opening quote
    std::string out;
    while (true) {
        if (cur.done() || cur.peek() == '\n') fail(cur.line, "unterminated string");
        const char c = cur.get();
        if (c == '"') break;
        if (c == '\\') {
            if (cur.done()) fail(cur.line, "bad escape");
            const char e = cur.get();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: fail(cur.line, std::string("unknown escape \\") + e);
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Value read_value(Cursor& cur, bool allow_array) {
    Value v;
    const char c = cur.peek();
    if (c == '"') {
        v.kind = Value::Kind::String;
        v.str = read_string(cur);
        return v;
    }
    if (c == '[') {
        if (!allow_array) fail(cur.line, "nested arrays are not supported");
        cur.get();
        v.kind = Value::Kind::Array;
        while (true) {
            cur.skip(true);
            if (cur.peek() == ']') {
                cur.get();
                break;
            }
            v.items.push_back(read_value(cur, false));
            cur.skip(true);
            if (cur.peek() == ',') {
                cur.get();
            } else if (cur.peek() == ']') {
                cur.get();
                break;
            } else {
                fail(cur.line, "expected ',' or ']' in array");
            }
        }
        return v;
    }
    const std::string bare = read_bare(cur);
    if (bare == "true" || bare == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = bare == "true";
        return v;
    }
    if (bare.empty()) fail(cur.line, "expected a value");
    v.kind = Value::Kind::Number;
    try {
        v.num = parse_double(bare, "value");
    } catch (const ValidationError&) {
        fail(cur.line, "not a number: '" + bare + "'");
    }
    v.str = bare;
    return v;
}

}  // namespace

const std::string& Value::as_string(std::string_view key) const {
    if (kind != Kind::String) throw ValidationError("key '" + std::string(key) + "': expected a string");
    return str;
}

double Value::as_number(std::string_view key) const {
    if (kind != Kind::Number) throw ValidationError("key '" + std::string(key) + "': expected a number");
    return num;
}

bool Value::as_bool(std::string_view key) const {
    if (kind != Kind::Bool) throw ValidationError("key '" + std::string(key) + "': expected true/false");
    return boolean;
}

const std::vector<Value>& Value::as_array(std::string_view key) const {
    if (kind != Kind::Array) throw ValidationError("key '" + std::string(key) + "': expected an array");
    return items;
}

void Table::set(std::string key, Value value, int line) {
    if (find(key) != nullptr) fail(line, "duplicate key '" + key + "'");
    entries_.emplace_back(std::move(key), std::move(value));
}

const Value* Table::find(std::string_view key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

const Value& Table::at(std::string_view key) const {
    const Value* v = find(key);
    if (v == nullptr) throw ValidationError("missing key '" + std::string(key) + "'");
    return *v;
}

const std::vector<Table>& Document::array(std::string_view name) const {
    static const std::vector<Table> empty;
    const auto it = array_tables.find(name);
    return it == array_tables.end() ? empty : it->second;
}

Document parse(std::string_view text) {
    Document doc;
    Cursor cur{text};
    Table* current = &doc.root;
    while (true) {
        cur.skip(true);
        if (cur.done()) break;
        if (cur.peek() == '[') {
            cur.get();
            const bool is_array = cur.peek() == '[';
            if (is_array) cur.get();
            cur.skip(false);
            const std::string name = read_bare(cur);
            if (name.empty()) fail(cur.line, "empty table name");
            cur.skip(false);
            if (cur.peek() != ']') fail(cur.line, "expected ']'");
            cur.get();
            if (is_array) {
                if (cur.peek() != ']') fail(cur.line, "expected ']]'");
                cur.get();
                auto& list = doc.array_tables[name];
                list.emplace_back();
                current = &list.back();
            } else {
                if (doc.tables.contains(name)) fail(cur.line, "duplicate table [" + name + "]");
                current = &doc.tables[name];
            }
        } else {
            const int line = cur.line;
            const std::string key = read_bare(cur);
            if (key.empty()) fail(line, std::string("unexpected character '") + cur.peek() + "'");
            cur.skip(false);
            if (cur.peek() != '=') fail(line, "expected '=' after key '" + key + "'");
            cur.get();
            cur.skip(false);
            Value value = read_value(cur, true);
            current->set(key, std::move(value), line);
        }
        cur.skip(false);
        if (!cur.done() && cur.peek() != '\n') fail(cur.line, "trailing characters");
    }
    return doc;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

}  // namespace xbench::toml
