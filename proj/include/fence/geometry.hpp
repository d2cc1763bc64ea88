#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "fence/model.hpp"

namespace fence
{

inline constexpr double collinearity_tolerance = 1e-12;

// Convex polygon, counterclockwise. One vertex is a point hull, two a segment.
template<typename Scalar>
struct PolygonT
{
  std::vector<Vec2T<Scalar>> vertices;
};
using Polygon = PolygonT<double>;

template<typename Scalar>
Scalar
cross( const Vec2T<Scalar>& o, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b )
{
  return ( a.x() - o.x() ) * ( b.y() - o.y() ) - ( a.y() - o.y() ) * ( b.x() - o.x() );
}

// Andrew's monotone chain; collinear boundary points are dropped.
template<typename Scalar>
PolygonT<Scalar>
convex_hull( std::type_identity_t<std::span<const Vec2T<Scalar>>> points )
{
  std::vector<Vec2T<Scalar>> pts( points.begin(), points.end() );
  std::sort( pts.begin(), pts.end(), []( const Vec2T<Scalar>& a, const Vec2T<Scalar>& b ) {
    return a.x() < b.x() || ( a.x() == b.x() && a.y() < b.y() );
  } );
  pts.erase( std::unique( pts.begin(), pts.end() ), pts.end() );
  if( pts.size() < 3 )
    return { pts };

  const Scalar               tol = Scalar( collinearity_tolerance );
  std::vector<Vec2T<Scalar>> hull( 2 * pts.size() );
  std::size_t                k = 0;
  for( const auto& p : pts )
  {
    while( k >= 2 && cross( hull[k - 2], hull[k - 1], p ) <= tol )
      --k;
    hull[k++] = p;
  }
  for( std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0; )
  {
    while( k >= lower && cross( hull[k - 2], hull[k - 1], pts[i] ) <= tol )
      --k;
    hull[k++] = pts[i];
  }
  hull.resize( k - 1 );
  return { hull };
}

template<typename Scalar>
Scalar
distance_to_segment( const Vec2T<Scalar>& p, const Vec2T<Scalar>& a, const Vec2T<Scalar>& b )
{
  const Vec2T<Scalar> ab = b - a;
  const Scalar        len2 = ab.squaredNorm();
  if( len2 == Scalar( 0 ) )
    return ( p - a ).norm();
  const Scalar t = std::clamp( ( p - a ).dot( ab ) / len2, Scalar( 0 ), Scalar( 1 ) );
  return ( p - ( a + t * ab ) ).norm();
}

// Distance from p to the hull; exactly 0 inside or on the boundary of a 2D hull.
template<typename Scalar>
Scalar
distance_to_hull( const Vec2T<Scalar>& p, const PolygonT<Scalar>& hull )
{
  const auto& v = hull.vertices;
  if( v.empty() )
    throw ValidationError( "empty hull" );
  if( v.size() == 1 )
    return ( p - v[0] ).norm();
  if( v.size() == 2 )
    return distance_to_segment( p, v[0], v[1] );

  const Scalar tol    = Scalar( collinearity_tolerance );
  bool         inside = true;
  Scalar       best   = std::numeric_limits<Scalar>::infinity();
  for( std::size_t i = 0; i < v.size(); ++i )
  {
    const auto& a = v[i];
    const auto& b = v[( i + 1 ) % v.size()];
    if( cross( a, b, p ) < -tol )
      inside = false;
    best = std::min( best, distance_to_segment( p, a, b ) );
  }
  return inside ? Scalar( 0 ) : best;
}

} // namespace fence
