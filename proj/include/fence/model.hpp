#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fence/errors.hpp"

namespace fence
{

template<typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
using Vec2  = Vec2T<double>;

template<typename Scalar>
using Mat2T = Eigen::Matrix<Scalar, 2, 2>;

// Per-agent state, stacked as [x; v; eps; zeta].
template<typename Scalar>
struct AgentStateT
{
  using Stacked = Eigen::Matrix<Scalar, 8, 1>;

  Vec2T<Scalar> x    = Vec2T<Scalar>::Zero();
  Vec2T<Scalar> v    = Vec2T<Scalar>::Zero();
  Vec2T<Scalar> eps  = Vec2T<Scalar>::Zero();
  Vec2T<Scalar> zeta = Vec2T<Scalar>::Zero();

  Stacked
  stacked() const
  {
    Stacked s;
    s << x, v, eps, zeta;
    return s;
  }

  static AgentStateT
  from_stacked( const Stacked& s )
  {
    return { s.template segment<2>( 0 ), s.template segment<2>( 2 ), s.template segment<2>( 4 ),
             s.template segment<2>( 6 ) };
  }

  bool operator==( const AgentStateT& ) const = default;
};
using AgentState = AgentStateT<double>;

// Target position/velocity plus the exosystem parameter s1 <= 0.
template<typename Scalar>
class TargetStateT
{
public:
  TargetStateT( const Vec2T<Scalar>& x_d, const Vec2T<Scalar>& v_d, Scalar s1 )
      : x_d_( x_d )
      , v_d_( v_d )
      , s1_( s1 )
  {
    if( !( s1 <= Scalar( 0 ) ) )
      throw ValidationError( "exosystem parameter s1 must be <= 0" );
  }

  const Vec2T<Scalar>& x_d() const { return x_d_; }
  const Vec2T<Scalar>& v_d() const { return v_d_; }
  Scalar               s1() const { return s1_; }

  // sigma = [x_d; v_d]
  Eigen::Matrix<Scalar, 4, 1>
  sigma() const
  {
    Eigen::Matrix<Scalar, 4, 1> s;
    s << x_d_, v_d_;
    return s;
  }

  TargetStateT
  with_sigma( const Eigen::Matrix<Scalar, 4, 1>& s ) const
  {
    return TargetStateT( s.template head<2>(), s.template tail<2>(), s1_ );
  }

  bool operator==( const TargetStateT& ) const = default;

private:
  Vec2T<Scalar> x_d_;
  Vec2T<Scalar> v_d_;
  Scalar        s1_;
};
using TargetState = TargetStateT<double>;

// Safe distance r and detection radius R, 0 < r < R.
template<typename Scalar>
class PotentialParamsT
{
public:
  PotentialParamsT( Scalar r, Scalar R )
      : r_( r )
      , R_( R )
  {
    if( !( r > Scalar( 0 ) ) || !( r < R ) )
      throw ValidationError( "potential radii must satisfy 0 < r < R" );
  }

  Scalar r() const { return r_; }
  Scalar R() const { return R_; }

private:
  Scalar r_;
  Scalar R_;
};
using PotentialParams = PotentialParamsT<double>;

// Controller gains k1..k5, all strictly positive.
template<typename Scalar>
class GainsT
{
public:
  GainsT( Scalar k1, Scalar k2, Scalar k3, Scalar k4, Scalar k5 )
      : k1_( k1 )
      , k2_( k2 )
      , k3_( k3 )
      , k4_( k4 )
      , k5_( k5 )
  {
    for( Scalar k : { k1, k2, k3, k4, k5 } )
      if( !( k > Scalar( 0 ) ) || !std::isfinite( static_cast<double>( k ) ) )
        throw ValidationError( "gains k1..k5 must be finite and strictly positive" );
  }

  Scalar k1() const { return k1_; }
  Scalar k2() const { return k2_; }
  Scalar k3() const { return k3_; }
  Scalar k4() const { return k4_; }
  Scalar k5() const { return k5_; }

private:
  Scalar k1_, k2_, k3_, k4_, k5_;
};
using Gains = GainsT<double>;

// Expands a base-form matrix M to M (x) I2.
template<typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
kron_i2( const Eigen::MatrixBase<Derived>& m )
{
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out
      = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero( 2 * m.rows(), 2 * m.cols() );
  for( Eigen::Index i = 0; i < m.rows(); ++i )
    for( Eigen::Index j = 0; j < m.cols(); ++j )
    {
      out( 2 * i, 2 * j )         = m( i, j );
      out( 2 * i + 1, 2 * j + 1 ) = m( i, j );
    }
  return out;
}

// Base-form transition matrix of the target exosystem; each entry multiplies I2.
template<typename Scalar>
Mat2T<Scalar>
exosystem_transition( Scalar s1, Scalar t )
{
  using std::cos;
  using std::sin;
  using std::sqrt;
  Mat2T<Scalar> phi;
  if( s1 == Scalar( 0 ) )
  {
    phi << Scalar( 1 ), t, Scalar( 0 ), Scalar( 1 );
    return phi;
  }
  const Scalar w = sqrt( -s1 );
  const Scalar c = cos( w * t );
  const Scalar s = sin( w * t );
  phi << c, s / w, -w * s, c;
  return phi;
}

template<typename Scalar>
std::pair<Vec2T<Scalar>, Vec2T<Scalar>>
target_state_at( const Vec2T<Scalar>& x_d0, const Vec2T<Scalar>& v_d0, Scalar s1, Scalar t )
{
  const Mat2T<Scalar> phi = exosystem_transition( s1, t );
  return { phi( 0, 0 ) * x_d0 + phi( 0, 1 ) * v_d0, phi( 1, 0 ) * x_d0 + phi( 1, 1 ) * v_d0 };
}

template<typename Scalar>
TargetStateT<Scalar>
target_state_at( const TargetStateT<Scalar>& target0, Scalar t )
{
  auto [x, v] = target_state_at( target0.x_d(), target0.v_d(), target0.s1(), t );
  return TargetStateT<Scalar>( x, v, target0.s1() );
}

// Solves the position row of the transition matrix for v_d(0).
template<typename Scalar>
Vec2T<Scalar>
recover_initial_velocity( const Vec2T<Scalar>& x_d0, const Vec2T<Scalar>& x_d_t, Scalar t, Scalar s1 )
{
  using std::abs;
  using std::cos;
  using std::sin;
  using std::sqrt;
  if( !( t > Scalar( 0 ) ) )
    throw SingularObservation( "observation time must be positive" );
  if( s1 == Scalar( 0 ) )
    return ( x_d_t - x_d0 ) / t;
  const Scalar w = sqrt( -s1 );
  const Scalar s = sin( w * t );
  if( abs( s ) < Scalar( 1e-9 ) )
    throw SingularObservation( "sin(sqrt(-s1) t) vanishes; position row is not invertible" );
  return w * ( x_d_t - cos( w * t ) * x_d0 ) / s;
}

// Repulsive potential 1/(s-r) - 1/(R-r) on (r, R], zero beyond R.
template<typename Scalar>
Scalar
alpha( Scalar s, const PotentialParamsT<Scalar>& pp )
{
  if( !( s > pp.r() ) )
    throw BelowSafeDistance( static_cast<double>( s ) );
  if( s > pp.R() )
    return Scalar( 0 );
  return Scalar( 1 ) / ( s - pp.r() ) - Scalar( 1 ) / ( pp.R() - pp.r() );
}

// Integral of alpha over [d, R].
template<typename Scalar>
Scalar
alpha_integral( Scalar d, const PotentialParamsT<Scalar>& pp )
{
  using std::log;
  if( !( d > pp.r() ) )
    throw BelowSafeDistance( static_cast<double>( d ) );
  if( d >= pp.R() )
    return Scalar( 0 );
  const Scalar span = pp.R() - pp.r();
  return log( span / ( d - pp.r() ) ) - ( pp.R() - d ) / span;
}

// Indices of agents sorted lexicographically by position. Positions are pairwise
// distinct, so this order depends only on the configuration, not on labels.
template<typename Scalar>
std::vector<std::size_t>
canonical_order( std::span<const Vec2T<Scalar>> positions )
{
  std::vector<std::size_t> idx( positions.size() );
  std::iota( idx.begin(), idx.end(), std::size_t{ 0 } );
  std::sort( idx.begin(), idx.end(), [&]( std::size_t a, std::size_t b ) {
    const auto& pa = positions[a];
    const auto& pb = positions[b];
    return pa.x() < pb.x() || ( pa.x() == pb.x() && pa.y() < pb.y() );
  } );
  return idx;
}

// Sensing neighborhood: every other agent within distance R (inclusive).
template<typename Scalar>
std::vector<std::size_t>
neighbors( std::size_t i, std::type_identity_t<std::span<const Vec2T<Scalar>>> positions, Scalar R )
{
  std::vector<std::size_t> out;
  for( std::size_t k = 0; k < positions.size(); ++k )
    if( k != i && ( positions[i] - positions[k] ).norm() <= R )
      out.push_back( k );
  return out;
}

// eta_i: sum over detected neighbors of alpha(|x_ik|) x_ik / |x_ik|.
// Contributions are accumulated in canonical (position) order so that relabelling
// agents never changes the floating-point result.
template<typename Scalar>
Vec2T<Scalar>
repulsion( std::size_t i, std::type_identity_t<std::span<const Vec2T<Scalar>>> positions,
           const PotentialParamsT<Scalar>& pp, std::span<const std::size_t> order )
{
  Vec2T<Scalar> eta = Vec2T<Scalar>::Zero();
  for( std::size_t k : order )
  {
    if( k == i )
      continue;
    const Vec2T<Scalar> rel  = positions[i] - positions[k];
    const Scalar        dist = rel.norm();
    if( dist > pp.R() )
      continue;
    eta += alpha( dist, pp ) * rel / dist;
  }
  return eta;
}

template<typename Scalar>
Vec2T<Scalar>
repulsion( std::size_t i, std::type_identity_t<std::span<const Vec2T<Scalar>>> positions,
           const PotentialParamsT<Scalar>& pp )
{
  const auto order = canonical_order<Scalar>( positions );
  return repulsion( i, positions, pp, std::span<const std::size_t>( order ) );
}

} // namespace fence
