#pragma once

#include "psjs/model.hpp"

#include <string>
#include <string_view>

namespace psjs {

// Bare identifiers are runs of characters outside whitespace, '<', '>', ':',
// '"', '#', '(', ')' and ','; anything else is written in double quotes.
bool is_bare_name(std::string_view name);
std::string quote_name(std::string_view name);

Model parse_model(std::string_view text);
std::string render_model(const Model& m);

Model load_model_file(const std::string& path);
void save_model_file(const Model& m, const std::string& path);

// Shared tokenizer for the model and pPDS formats.
struct Token {
    enum Kind { Name, Quoted, LAngle, RAngle, Arrow, Colon, End } kind = End;
    std::string text;
    int column = 0;
};
std::vector<Token> tokenize_line(std::string_view line, int line_no);

} // namespace psjs
