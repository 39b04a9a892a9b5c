#ifndef ACTDST_ERRORS_H_
#define ACTDST_ERRORS_H_

#include <stdexcept>
#include <string>

namespace actdst {

// Malformed or inconsistent input data (ontology, dialogues, vectors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file that should exist could not be opened.
class MissingFileError : public DataError {
 public:
  explicit MissingFileError(const std::string& path)
      : DataError("cannot open file: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Run configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint file is corrupt, from another format version, or was trained
// against a different ontology.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace actdst

#endif  // ACTDST_ERRORS_H_
