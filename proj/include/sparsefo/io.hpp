#pragma once

#include <string>

#include "sparsefo/structures.hpp"

namespace sparsefo {

// graph <n>
// e u v
Graph parse_graph(const std::string& text);
std::string write_graph(const Graph& g);

// forest <n>
// p child parent
// c color node
// f flag 0|1
RootedForest parse_forest(const std::string& text);
std::string write_forest(const RootedForest& f);

// structure [n]
// rel NAME ARITY   followed by tuple lines (a flag block holds `true` or nothing)
// fun NAME         followed by `x fx` lines
// Also accepts graph and forest files, converted to structures.
RelationalStructure parse_structure(const std::string& text);
std::string write_structure(const RelationalStructure& a);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sparsefo
