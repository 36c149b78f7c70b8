#pragma once

#include <stdexcept>
#include <string>

namespace offmix {

// Error codes carried by every exception the library throws. The string
// form is module-qualified ("corpus.duplicate_id") so the CLI can surface
// machine-readable failures.
enum class ErrorCode {
  // corpus
  MalformedRow,
  UnknownLabel,
  DuplicateId,
  EmptyFile,
  UnlabeledSample,
  FractionOutOfRange,
  // translate
  ProviderUnavailable,
  RateLimited,
  ProviderError,
  // encoder
  EmptyText,
  BackendUnavailable,
  // fusion
  LengthMismatch,
  NonFiniteInput,
  AllMasked,
  // train_eval
  NonFiniteLoss,
  EmptyDataset,
  EmptyInput,
  // cli
  UnknownCommand,
  MissingFlag,
  // everything else
  Io,
  Config,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace offmix
