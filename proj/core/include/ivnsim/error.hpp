#pragma once

#include <stdexcept>
#include <string>

namespace ivn {

enum class ErrorCode {
  PastEvent,
  DispatchFailure,
  TtBufferOverrun,
  QueueOverflow,
  UnknownCtId,
  DuplicateId,
  NotAMember,
  MalformedPayload,
  IncompleteTrail,
  Infeasible,
  LcmOverflow,
  Config,
  Io,
};

const char* error_code_name(ErrorCode code);

class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivn
