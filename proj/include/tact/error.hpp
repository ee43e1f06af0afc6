#pragma once

#include <stdexcept>
#include <string>

namespace tact {

// Base for every error raised by the library. The CLI maps each subclass to
// an exit code through `category()`.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Data, Numeric, Internal };

  explicit Error(const std::string& what, Category category = Category::Internal)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what, Category::Data) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, Category::Data) {}
};

class VocabError : public Error {
 public:
  explicit VocabError(const std::string& what) : Error(what, Category::Data) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error(what, Category::Data) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error(what, Category::Internal) {}
};

// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(what, Category::Internal) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what, Category::Internal) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, Category::Numeric) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, Category::Usage) {}
};

}  // namespace tact
