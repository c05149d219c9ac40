#pragma once

#include <stdexcept>
#include <string>

namespace rmfc {

struct MalformedInput : std::runtime_error {
    explicit MalformedInput(const std::string& m) : std::runtime_error("malformed input: " + m) {}
};
struct EmptyTargets : std::runtime_error {
    EmptyTargets() : std::runtime_error("target set is empty") {}
};
struct LevelOutOfRange : std::runtime_error {
    explicit LevelOutOfRange(const std::string& m) : std::runtime_error("level out of range: " + m) {}
};
struct NonzeroBudget : std::runtime_error {
    explicit NonzeroBudget(const std::string& m) : std::runtime_error("nonzero budget: " + m) {}
};
struct BudgetOutOfRange : std::runtime_error {
    explicit BudgetOutOfRange(const std::string& m) : std::runtime_error("budget out of range: " + m) {}
};
struct PreconditionViolated : std::runtime_error {
    explicit PreconditionViolated(const std::string& m) : std::runtime_error("precondition violated: " + m) {}
};
struct ResourceCap : std::runtime_error {
    explicit ResourceCap(const std::string& m) : std::runtime_error("resource cap exceeded: " + m) {}
};
struct EmptyCollection : std::runtime_error {
    explicit EmptyCollection(const std::string& m) : std::runtime_error("empty collection: " + m) {}
};
struct ParameterOutOfRange : std::runtime_error {
    explicit ParameterOutOfRange(const std::string& m) : std::runtime_error("parameter out of range: " + m) {}
};

}  // namespace rmfc
