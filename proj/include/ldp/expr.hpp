#pragma once

#include <functional>
#include <string>

namespace ldp {

// Compiles a scalar expression of one variable `x` into a callable.
// Supported: numbers, x, + - * / ^, parentheses, unary minus, and the
// functions sin cos tan exp log sqrt tanh abs. Throws ValidationError
// with a character position on malformed input.
std::function<double(double)> compile_expression(const std::string& text);

}  // namespace ldp
