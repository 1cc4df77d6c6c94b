#include "cqte/reference_values.hpp"

namespace cqte {

namespace {

using T = EstimatorTag;

const std::vector<ReferenceCell> kTable = {
    // group, n, model, estimator, bias{-0.2,0,0.2}, sd{...}, mse{...}
    {1, 500, 1, T::ocqte, {0.0213, 0.0235, 0.0209}, {0.0343, 0.0261, 0.0315}, {0.0016, 0.0012, 0.0014}},
    {1, 500, 1, T::pcqte, {0.0212, 0.0233, 0.0209}, {0.0330, 0.0249, 0.0306}, {0.0015, 0.0012, 0.0014}},
    {1, 500, 1, T::ncqte, {0.0305, 0.0311, 0.0269}, {0.0325, 0.0246, 0.0304}, {0.0020, 0.0016, 0.0016}},
    {1, 500, 1, T::scqte, {0.0284, 0.0298, 0.0263}, {0.0328, 0.0249, 0.0306}, {0.0019, 0.0015, 0.0016}},
    {1, 500, 2, T::ocqte, {0.0163, 0.0183, 0.0165}, {0.0334, 0.0259, 0.0323}, {0.0014, 0.0010, 0.0013}},
    {1, 500, 2, T::pcqte, {0.0162, 0.0179, 0.0164}, {0.0329, 0.0251, 0.0316}, {0.0013, 0.0009, 0.0013}},
    {1, 500, 2, T::ncqte, {0.0198, 0.0217, 0.0201}, {0.0327, 0.0248, 0.0313}, {0.0015, 0.0011, 0.0014}},
    {1, 500, 2, T::scqte, {0.0243, 0.0264, 0.0244}, {0.0326, 0.0250, 0.0314}, {0.0017, 0.0013, 0.0016}},
    {1, 500, 3, T::ocqte, {0.0613, 0.0802, 0.0829}, {0.0432, 0.0403, 0.0439}, {0.0056, 0.0081, 0.0088}},
    {1, 500, 3, T::pcqte, {0.0610, 0.0805, 0.0833}, {0.0417, 0.0378, 0.0424}, {0.0055, 0.0079, 0.0087}},
    {1, 500, 3, T::ncqte, {0.0812, 0.1007, 0.0984}, {0.0411, 0.0379, 0.0425}, {0.0083, 0.0116, 0.0115}},
    {1, 500, 3, T::scqte, {0.0819, 0.1024, 0.1004}, {0.0413, 0.0375, 0.0424}, {0.0084, 0.0119, 0.0119}},
    {1, 1000, 1, T::ocqte, {0.0193, 0.0198, 0.0191}, {0.0236, 0.0183, 0.0223}, {0.0009, 0.0007, 0.0009}},
    {1, 1000, 1, T::pcqte, {0.0192, 0.0199, 0.0192}, {0.0227, 0.0174, 0.0218}, {0.0009, 0.0007, 0.0008}},
    {1, 1000, 1, T::ncqte, {0.0276, 0.0268, 0.0243}, {0.0225, 0.0172, 0.0214}, {0.0013, 0.0010, 0.0010}},
    {1, 1000, 1, T::scqte, {0.0249, 0.0252, 0.0234}, {0.0235, 0.0180, 0.0218}, {0.0012, 0.0010, 0.0010}},
    {1, 1000, 2, T::ocqte, {0.0134, 0.0138, 0.0138}, {0.0234, 0.0191, 0.0235}, {0.0007, 0.0006, 0.0007}},
    {1, 1000, 2, T::pcqte, {0.0132, 0.0137, 0.0137}, {0.0230, 0.0185, 0.0230}, {0.0007, 0.0005, 0.0007}},
    {1, 1000, 2, T::ncqte, {0.0154, 0.0162, 0.0161}, {0.0239, 0.0188, 0.0231}, {0.0008, 0.0006, 0.0008}},
    {1, 1000, 2, T::scqte, {0.0195, 0.0207, 0.0200}, {0.0230, 0.0187, 0.0230}, {0.0009, 0.0008, 0.0009}},
    {1, 1000, 3, T::ocqte, {0.0555, 0.0722, 0.0775}, {0.0317, 0.0285, 0.0304}, {0.0041, 0.0060, 0.0069}},
    {1, 1000, 3, T::pcqte, {0.0555, 0.0719, 0.0774}, {0.0306, 0.0275, 0.0299}, {0.0040, 0.0059, 0.0069}},
    {1, 1000, 3, T::ncqte, {0.0749, 0.0906, 0.0914}, {0.0302, 0.0272, 0.0298}, {0.0065, 0.0089, 0.0092}},
    {1, 1000, 3, T::scqte, {0.0746, 0.0905, 0.0920}, {0.0303, 0.0271, 0.0296}, {0.0065, 0.0089, 0.0093}},
    {2, 500, 1, T::ocqte, {0.0213, 0.0235, 0.0209}, {0.0343, 0.0261, 0.0315}, {0.0016, 0.0012, 0.0014}},
    {2, 500, 1, T::pcqte, {0.0212, 0.0233, 0.0209}, {0.0330, 0.0249, 0.0306}, {0.0015, 0.0012, 0.0014}},
    {2, 500, 1, T::ncqte, {0.0289, 0.0295, 0.0253}, {0.0323, 0.0242, 0.0303}, {0.0019, 0.0015, 0.0016}},
    {2, 500, 1, T::scqte, {0.0280, 0.0295, 0.0260}, {0.0328, 0.0248, 0.0306}, {0.0019, 0.0015, 0.0016}},
    {2, 500, 2, T::ocqte, {0.0163, 0.0183, 0.0165}, {0.0334, 0.0259, 0.0323}, {0.0014, 0.0010, 0.0013}},
    {2, 500, 2, T::pcqte, {0.0162, 0.0179, 0.0164}, {0.0329, 0.0251, 0.0316}, {0.0013, 0.0009, 0.0013}},
    {2, 500, 2, T::ncqte, {0.0186, 0.0203, 0.0187}, {0.0327, 0.0253, 0.0317}, {0.0014, 0.0011, 0.0014}},
    {2, 500, 2, T::scqte, {0.0239, 0.0261, 0.0240}, {0.0327, 0.0250, 0.0314}, {0.0016, 0.0013, 0.0016}},
    {2, 500, 3, T::ocqte, {0.0613, 0.0802, 0.0829}, {0.0432, 0.0403, 0.0439}, {0.0056, 0.0081, 0.0088}},
    {2, 500, 3, T::pcqte, {0.0610, 0.0805, 0.0833}, {0.0417, 0.0378, 0.0424}, {0.0055, 0.0079, 0.0087}},
    {2, 500, 3, T::ncqte, {0.0777, 0.0968, 0.0953}, {0.0409, 0.0375, 0.0421}, {0.0077, 0.0108, 0.0109}},
    {2, 500, 3, T::scqte, {0.0806, 0.1008, 0.0992}, {0.0413, 0.0376, 0.0423}, {0.0082, 0.0116, 0.0116}},
    {2, 1000, 1, T::ocqte, {0.0193, 0.0198, 0.0191}, {0.0236, 0.0183, 0.0223}, {0.0009, 0.0007, 0.0009}},
    {2, 1000, 1, T::pcqte, {0.0192, 0.0199, 0.0192}, {0.0227, 0.0174, 0.0218}, {0.0009, 0.0007, 0.0008}},
    {2, 1000, 1, T::ncqte, {0.0260, 0.0253, 0.0229}, {0.0223, 0.0169, 0.0212}, {0.0012, 0.0009, 0.0010}},
    {2, 1000, 1, T::scqte, {0.0244, 0.0249, 0.0232}, {0.0243, 0.0184, 0.0218}, {0.0012, 0.0010, 0.0010}},
    {2, 1000, 2, T::ocqte, {0.0134, 0.0138, 0.0138}, {0.0234, 0.0191, 0.0235}, {0.0007, 0.0006, 0.0007}},
    {2, 1000, 2, T::pcqte, {0.0132, 0.0137, 0.0137}, {0.0230, 0.0185, 0.0230}, {0.0007, 0.0005, 0.0007}},
    {2, 1000, 2, T::ncqte, {0.0141, 0.0146, 0.0148}, {0.0256, 0.0212, 0.0251}, {0.0009, 0.0007, 0.0008}},
    {2, 1000, 2, T::scqte, {0.0190, 0.0203, 0.0197}, {0.0233, 0.0188, 0.0230}, {0.0009, 0.0008, 0.0009}},
    {2, 1000, 3, T::ocqte, {0.0555, 0.0722, 0.0775}, {0.0317, 0.0285, 0.0304}, {0.0041, 0.0060, 0.0069}},
    {2, 1000, 3, T::pcqte, {0.0555, 0.0719, 0.0774}, {0.0306, 0.0275, 0.0299}, {0.0040, 0.0059, 0.0069}},
    {2, 1000, 3, T::ncqte, {0.0711, 0.0870, 0.0885}, {0.0299, 0.0269, 0.0295}, {0.0060, 0.0083, 0.0087}},
    {2, 1000, 3, T::scqte, {0.0732, 0.0891, 0.0907}, {0.0302, 0.0271, 0.0295}, {0.0063, 0.0087, 0.0091}},
};

} // namespace

const std::vector<ReferenceCell>& reference_values() { return kTable; }

const ReferenceCell* find_reference(int group, int n, int model, EstimatorTag estimator) {
    for (const auto& cell : kTable)
        if (cell.group == group && cell.n == n && cell.model == model &&
            cell.estimator == estimator)
            return &cell;
    return nullptr;
}

} // namespace cqte
