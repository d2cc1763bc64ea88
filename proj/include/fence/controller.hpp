#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <type_traits>
#include <utility>

#include "fence/model.hpp"

namespace fence
{

// u_i = -k1 x - k2 v - k3 eps - k4 zeta + k5 eta
template<typename Scalar>
Vec2T<Scalar>
control_input( const AgentStateT<Scalar>& agent, const Vec2T<Scalar>& eta, const GainsT<Scalar>& g )
{
  return -g.k1() * agent.x - g.k2() * agent.v - g.k3() * agent.eps - g.k4() * agent.zeta + g.k5() * eta;
}

// Internal model: eps' = zeta, zeta' = s1 eps + (x - x_d) - k5 eta.
template<typename Scalar>
std::pair<Vec2T<Scalar>, Vec2T<Scalar>>
internal_model_derivative( const AgentStateT<Scalar>& agent, const Vec2T<Scalar>& x_d, const Vec2T<Scalar>& eta,
                           Scalar s1, Scalar k5 )
{
  return { agent.zeta, s1 * agent.eps + ( agent.x - x_d ) - k5 * eta };
}

template<typename Scalar>
struct ControlOutputT
{
  Vec2T<Scalar> u;
  Vec2T<Scalar> eps_dot;
  Vec2T<Scalar> zeta_dot;
};
using ControlOutput = ControlOutputT<double>;

// Label-fixed baseline: the same regulator and internal model applied to the
// offset-shifted position x - d_des, with no repulsion.
template<typename Scalar>
ControlOutputT<Scalar>
label_fixed_control( const AgentStateT<Scalar>& agent, const Vec2T<Scalar>& x_d, const Vec2T<Scalar>& d_des,
                     Scalar s1, const GainsT<Scalar>& g )
{
  AgentStateT<Scalar> shifted = agent;
  shifted.x -= d_des;
  const Vec2T<Scalar> none = Vec2T<Scalar>::Zero();
  auto [eps_dot, zeta_dot] = internal_model_derivative( shifted, x_d, none, s1, g.k5() );
  return { control_input( shifted, none, g ), eps_dot, zeta_dot };
}

// C1: all initial pairwise distances strictly exceed r.
template<typename Scalar>
bool
check_c1( std::type_identity_t<std::span<const Vec2T<Scalar>>> positions, Scalar r )
{
  for( std::size_t i = 0; i < positions.size(); ++i )
    for( std::size_t k = i + 1; k < positions.size(); ++k )
      if( !( ( positions[i] - positions[k] ).norm() > r ) )
        return false;
  return true;
}

struct GainReport
{
  double c2_equality_residual = 0.0; // k2 - k4 (k1 + s1 - 1) / k3
  double c2_inequality        = 0.0; // k1 - k3 + s1 - 1
  double fencing_lhs1         = 0.0;
  double fencing_lhs2         = 0.0;
  bool   c2_holds             = false;
  bool   fencing_holds        = false;
};

inline constexpr double c2_relative_tolerance = 1e-9;

// Evaluates condition C2 and the fencing (Hurwitz) gain inequalities.
template<typename Scalar>
GainReport
check_gains( const GainsT<Scalar>& g, Scalar s1 )
{
  using std::abs;
  const Scalar k1 = g.k1(), k2 = g.k2(), k3 = g.k3(), k4 = g.k4();
  const Scalar denom = k1 * k2 - k4;
  if( abs( denom ) <= Scalar( 1e-12 ) * std::max( Scalar( 1 ), abs( k4 ) ) )
    throw DegenerateGains( "k1*k2 == k4: fencing inequality is undefined" );

  GainReport rep;
  rep.c2_equality_residual = static_cast<double>( k2 - k4 * ( k1 + s1 - Scalar( 1 ) ) / k3 );
  rep.c2_inequality        = static_cast<double>( k1 - k3 + s1 - Scalar( 1 ) );
  rep.fencing_lhs1         = static_cast<double>( k4 - s1 * k2 - k2 * k2 * ( k3 - s1 * k1 ) / denom );
  rep.fencing_lhs2         = static_cast<double>( denom / k2 );
  rep.c2_holds = abs( rep.c2_equality_residual ) <= c2_relative_tolerance * std::max( 1.0, static_cast<double>( k2 ) )
                 && rep.c2_inequality > 0.0;
  rep.fencing_holds = rep.fencing_lhs1 > 0.0 && rep.fencing_lhs2 > 0.0;
  return rep;
}

} // namespace fence
