#pragma once

#include <string>
#include <vector>

#include "mcgrad/errors.hpp"

namespace mcgrad {

// Named, ordered vector of distribution parameters. Index i in any gradient
// output refers to entry i here; the order is fixed for the life of a
// distribution instance.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(std::initializer_list<std::pair<std::string, double>> init) {
        for (const auto& [n, v] : init) push_back(n, v);
    }

    void push_back(const std::string& name, double value) {
        for (const auto& n : names_)
            if (n == name) throw ConfigError("duplicate parameter name: " + name);
        names_.push_back(name);
        values_.push_back(value);
    }

    int size() const { return static_cast<int>(values_.size()); }
    const std::string& name(int i) const { return names_.at(i); }
    double value(int i) const { return values_.at(i); }
    double& value(int i) { return values_.at(i); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }

    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names_[i] == name) return i;
        throw ConfigError("no such parameter: " + name);
    }

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
};

}  // namespace mcgrad
