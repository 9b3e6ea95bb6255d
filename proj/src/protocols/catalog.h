#ifndef QCAL_SRC_PROTOCOLS_CATALOG_H_
#define QCAL_SRC_PROTOCOLS_CATALOG_H_

#include "qcal/protocols.h"

namespace qcal::protocols {

Routine resonator_spectroscopy();
Routine resonator_punchout();
Routine readout_frequency_optimization();
Routine qubit_spectroscopy();
Routine qubit_flux_dependence();
Routine rabi();
Routine ramsey();
Routine coherence_decay();
Routine flipping();
Routine drag_tuning();
Routine single_shot_classification();
Routine standard_rb();
Routine avoided_crossing();
Routine chevron();
Routine cz_virtual_phase();

}  // namespace qcal::protocols

#endif  // QCAL_SRC_PROTOCOLS_CATALOG_H_
