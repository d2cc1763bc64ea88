#pragma once

#include <stdexcept>
#include <string>

namespace fence
{

// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// A pairwise distance reached the safe distance r; the potential is undefined there.
class BelowSafeDistance : public Error
{
public:
  explicit BelowSafeDistance( double distance )
      : Error( "pairwise distance " + std::to_string( distance ) + " is at or below the safe distance" )
      , distance_( distance )
  {}
  double distance() const noexcept { return distance_; }

private:
  double distance_;
};

class SingularObservation : public Error
{
public:
  using Error::Error;
};

class DegenerateGains : public Error
{
public:
  using Error::Error;
};

class DegenerateRouthTable : public Error
{
public:
  using Error::Error;
};

class NotHurwitz : public Error
{
public:
  using Error::Error;
};

class SingularSystem : public Error
{
public:
  using Error::Error;
};

class C2Violated : public Error
{
public:
  using Error::Error;
};

class NotSymmetric : public Error
{
public:
  using Error::Error;
};

// Invalid parameters or scenario invariants.
class ValidationError : public Error
{
public:
  using Error::Error;
};

} // namespace fence
