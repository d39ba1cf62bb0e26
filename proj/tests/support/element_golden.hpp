#pragma once

// Hand-written expected obligations for the limited-growth element under the
// basic generator.

#include <map>
#include <string>

namespace hvc::testing {

inline const std::string kElementInv = "(v > 0 & bnd > v & rate < 1 & rate > 0)";
inline const std::string kElementPhy =
    "(" + kElementInv + " & cll = 0 & [{rate'=0, bnd'=0, v'=rate*(bnd-v) & true}]" + kElementInv + ")";

inline std::map<std::string, std::string> element_golden() {
  const std::string& I = kElementInv;
  const std::string& phy = kElementPhy;
  return {
      {"Element.init", "inV > 0 & inB > inV & inR < 1 & inR > 0 & cll = 0 -> "
                       "[?true; bnd := inB; rate := inR; v := inV;]" + phy},
      {"Element.inBound", I + " & cll = 0 -> [?true; {?nB >= bnd; bnd := nB; ++ ?!(nB >= bnd);}]" + phy},
      {"Element.outV", I + " & cll = 0 -> [?true; result := v;](" + phy + " & 0 < result)"},
      {"Element.inRate", I + " & 0 < nR & nR < 1 & cll = 0 -> [?true; rate := nR;]" + phy},
  };
}

}  // namespace hvc::testing
