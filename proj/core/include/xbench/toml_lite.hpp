#pragma once

// Reader for the TOML subset used by space and plan files:
//   key = "string" | number | true/false | [ scalar, ... ]
//   [table]  and  [[array-of-tables]]
//   '#' comments, arrays may span lines. No inline tables, no dotted keys.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xbench::toml {

struct Value {
    enum class Kind { String, Number, Bool, Array };
    Kind kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<Value> items;

    [[nodiscard]] const std::string& as_string(std::string_view key) const;
    [[nodiscard]] double as_number(std::string_view key) const;
    [[nodiscard]] bool as_bool(std::string_view key) const;
    [[nodiscard]] const std::vector<Value>& as_array(std::string_view key) const;
};

class Table {
public:
    void set(std::string key, Value value, int line);
    [[nodiscard]] const Value* find(std::string_view key) const;
    [[nodiscard]] const Value& at(std::string_view key) const;
    [[nodiscard]] bool contains(std::string_view key) const { return find(key) != nullptr; }
    [[nodiscard]] const std::vector<std::pair<std::string, Value>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, Value>> entries_;
};

struct Document {
    Table root;
    std::map<std::string, Table, std::less<>> tables;
    std::map<std::string, std::vector<Table>, std::less<>> array_tables;

    [[nodiscard]] const std::vector<Table>& array(std::string_view name) const;
};

/// Throws ValidationError with "line N: ..." on malformed input.
Document parse(std::string_view text);

std::string quote(std::string_view s);

}  // namespace xbench::toml
