import numpy as np
import pytest

from monofair import datasets
from monofair.data import DatasetSchema, MonotonicityTag, load_csv, packaged_schema
from monofair.errors import DataError

GERMAN_ROW = "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1"
GERMAN_ROW_2 = "A14 48 A30 A410 5951 A61 A71 2 A92 A103 2 A124 22 A141 A153 1 A171 2 A191 A202 2"

COMPAS_HEADER = (
    "age,race,two_year_recid,priors_count,juv_fel_count,juv_misd_count,juv_other_count,"
    "days_b_screening_arrest,is_recid,c_charge_degree,score_text"
)
COMPAS_ROWS = [
    "34,African-American,1,3,0,0,1,-1,1,F,Low",
    "24,Caucasian,0,0,0,1,0,0,0,M,Medium",
    "41,Caucasian,1,5,0,0,0,45,1,F,High",  # screening gap too large
    "55,Other,0,1,0,0,0,2,-1,F,Low",  # unknown recidivism
    "29,Hispanic,0,0,0,0,0,,0,F,Low",  # missing gap
    "30,African-American,0,2,0,0,0,1,0,O,Low",  # ordinary offence
    "31,African-American,0,2,0,0,0,1,0,F,N/A",  # no score
]


class TestPackagedSchemas:
    @pytest.mark.parametrize("name", sorted(datasets.SCHEMA_BUILDERS))
    def test_builders_match_shipped_files(self, name):
        assert packaged_schema(name) == datasets.SCHEMA_BUILDERS[name]()

    def test_german_width_and_tags(self):
        schema = datasets.german_credit_schema()
        tags = schema.feature_tags
        assert len(tags) == 58
        assert tags.count(MonotonicityTag.NONDECREASING) == 4
        assert tags.count(MonotonicityTag.NONINCREASING) == 3


class TestGerman:
    def test_row_encoding(self):
        row, age, good = datasets.german_row(GERMAN_ROW.split())
        names = datasets.german_credit_schema().feature_names
        enc = dict(zip(names, row))
        assert len(row) == 58
        assert enc["checking_balance"] == 1 and enc["credit_history"] == 0
        assert enc["savings_balance"] == 0 and enc["savings_unknown"] == 1
        assert enc["employment_tenure"] == 4 and enc["unemployed"] == 0
        assert enc["duration_months"] == 6 and enc["credit_amount"] == 1169
        assert enc["purpose_A43"] == 1 and sum(v for k, v in enc.items() if k.startswith("purpose_")) == 1
        assert enc["residence_years_n"] == 4 and enc["existing_credits_n"] == 2
        assert (age, good) == (1, 1)

    def test_second_row(self):
        row, age, good = datasets.german_row(GERMAN_ROW_2.split())
        enc = dict(zip(datasets.german_credit_schema().feature_names, row))
        assert enc["no_checking_account"] == 1 and enc["checking_balance"] == 0
        assert enc["no_credits_taken"] == 1 and enc["unemployed"] == 1
        assert (age, good) == (0, 0)

    def test_prepare(self, tmp_path):
        raw = tmp_path / "german.data"
        raw.write_text(GERMAN_ROW + "\n" + GERMAN_ROW_2 + "\n")
        csv_path, schema_path = datasets.prepare_german_credit(raw, tmp_path)
        data = load_csv(csv_path, DatasetSchema.load(schema_path))
        assert data.X.shape == (2, 58)
        np.testing.assert_array_equal(data.a, [1, 0])
        np.testing.assert_array_equal(data.y, [1, 0])

    def test_bad_field_count(self, tmp_path):
        raw = tmp_path / "german.data"
        raw.write_text("A11 6 A34\n")
        with pytest.raises(DataError, match="21 fields"):
            datasets.prepare_german_credit(raw, tmp_path)

    def test_unknown_code(self, tmp_path):
        raw = tmp_path / "german.data"
        raw.write_text(GERMAN_ROW.replace("A11", "A19", 1) + "\n")
        with pytest.raises(DataError, match="A19"):
            datasets.prepare_german_credit(raw, tmp_path)


class TestCompas:
    def test_filters_and_coding(self, tmp_path):
        raw = tmp_path / "compas.csv"
        raw.write_text("\n".join([COMPAS_HEADER, *COMPAS_ROWS]) + "\n")
        csv_path, schema_path = datasets.prepare_compas(raw, tmp_path)
        data = load_csv(csv_path, DatasetSchema.load(schema_path))
        np.testing.assert_array_equal(data.X, [[34, 3, 0, 0, 1], [24, 0, 0, 1, 0]])
        np.testing.assert_array_equal(data.a, [1, 0])
        np.testing.assert_array_equal(data.y, [1, 0])

    def test_missing_column(self, tmp_path):
        raw = tmp_path / "compas.csv"
        raw.write_text("age,race\n30,Other\n")
        with pytest.raises(DataError, match="missing columns"):
            datasets.prepare_compas(raw, tmp_path)

    def test_non_numeric_gap(self, tmp_path):
        raw = tmp_path / "compas.csv"
        raw.write_text(COMPAS_HEADER + "\n34,Other,1,3,0,0,1,soon,1,F,Low\n")
        with pytest.raises(DataError, match="days_b_screening_arrest"):
            datasets.prepare_compas(raw, tmp_path)


class TestLawSchool:
    def test_coding(self, tmp_path):
        raw = tmp_path / "law_data.csv"
        raw.write_text("sex,LSAT,UGPA,ZFYA,race\n1,39,3.1,0.09,White\n2,36,3.4,0.08,Black\n2,40,0.0,1.0,White\n")
        csv_path, schema_path = datasets.prepare_law_school(raw, tmp_path)
        data = load_csv(csv_path, DatasetSchema.load(schema_path))
        np.testing.assert_array_equal(data.X, [[3.1, 39], [3.4, 36]])
        np.testing.assert_array_equal(data.a, [0, 1])
        np.testing.assert_array_equal(data.y, [1, 0])

    def test_non_numeric(self, tmp_path):
        raw = tmp_path / "law_data.csv"
        raw.write_text("sex,LSAT,UGPA,ZFYA\n1,abc,3.1,0.5\n")
        with pytest.raises(DataError, match="LSAT"):
            datasets.prepare_law_school(raw, tmp_path)
